"""Synthetic records in NSL-KDD layout, for smoke runs and tests.

The generator plants family-specific signatures (e.g. R2L favours
``service=ftp_data`` with low ``count``) so that subgroup search has
something to find. It is not a stand-in for the real benchmark.
"""

import os

import numpy as np

from .data import CATEGORICAL_FEATURES, NUMERIC_FEATURES, RawDataset, write_nslkdd

SERVICES = ["http", "private", "domain_u", "smtp", "ftp_data", "ecr_i", "eco_i", "other",
            "telnet", "ftp", "finger", "urp_i", "auth", "pop_3", "imap4", "time"]
FLAGS = ["SF", "S0", "REJ", "RSTR", "RSTO", "SH", "S1"]
PROTOCOLS = ["tcp", "udp", "icmp"]

FAMILY_ATTACKS = {
    "DoS": ["neptune", "smurf", "back", "teardrop"],
    "Probe": ["satan", "ipsweep", "portsweep", "nmap"],
    "R2L": ["warezclient", "guess_passwd", "warezmaster", "imap"],
    "U2R": ["buffer_overflow", "rootkit"],
}
DEFAULT_MIX = {"normal": 0.53, "DoS": 0.30, "Probe": 0.10, "R2L": 0.06, "U2R": 0.01}


def _family_columns(fam, m, rng):
    """Numeric block (m x 38) and categoricals for one family."""
    X = rng.gamma(1.0, 1.0, size=(m, len(NUMERIC_FEATURES)))
    col = {n: i for i, n in enumerate(NUMERIC_FEATURES)}
    for rate in ("serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
                 "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate",
                 "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
                 "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
                 "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
                 "dst_host_srv_rerror_rate"):
        X[:, col[rate]] = rng.beta(1.0, 3.0, m)
    X[:, col["num_outbound_cmds"]] = 0.0
    X[:, col["count"]] = rng.poisson(40, m)
    X[:, col["srv_count"]] = rng.poisson(30, m)
    X[:, col["dst_host_count"]] = rng.integers(1, 256, m)
    X[:, col["dst_host_srv_count"]] = rng.integers(1, 256, m)
    X[:, col["logged_in"]] = rng.random(m) < 0.5
    svc_p = np.ones(len(SERVICES))
    flag_p = np.array([6.0, 1, 1, 0.3, 0.3, 0.2, 0.2])
    proto_p = np.array([6.0, 2, 1])
    if fam == "normal":
        svc_p[SERVICES.index("http")] = 10
        svc_p[SERVICES.index("smtp")] = 3
        X[:, col["same_srv_rate"]] = rng.beta(6.0, 1.0, m)
        X[:, col["logged_in"]] = rng.random(m) < 0.7
    elif fam == "DoS":
        svc_p[SERVICES.index("private")] = 10
        flag_p = np.array([1.0, 8, 2, 0.3, 0.3, 0.2, 0.2])
        X[:, col["count"]] = rng.poisson(200, m)
        X[:, col["serror_rate"]] = rng.beta(6.0, 1.0, m)
        X[:, col["same_srv_rate"]] = rng.beta(1.0, 6.0, m)
    elif fam == "Probe":
        svc_p[SERVICES.index("eco_i")] = 6
        svc_p[SERVICES.index("other")] = 4
        proto_p = np.array([2.0, 1, 4])
        flag_p = np.array([2.0, 1, 5, 2, 0.3, 0.2, 0.2])
        X[:, col["diff_srv_rate"]] = rng.beta(4.0, 2.0, m)
        X[:, col["dst_host_diff_srv_rate"]] = rng.beta(4.0, 2.0, m)
        X[:, col["rerror_rate"]] = rng.beta(3.0, 2.0, m)
    elif fam == "R2L":
        svc_p[SERVICES.index("ftp_data")] = 12
        svc_p[SERVICES.index("ftp")] = 5
        svc_p[SERVICES.index("http")] = 3
        X[:, col["count"]] = rng.poisson(3, m)
        X[:, col["srv_count"]] = rng.poisson(3, m)
        X[:, col["dst_host_same_src_port_rate"]] = rng.beta(5.0, 1.5, m)
        X[:, col["dst_host_srv_diff_host_rate"]] = rng.beta(3.0, 2.0, m)
        X[:, col["dst_host_count"]] = rng.integers(1, 60, m)
        X[:, col["num_failed_logins"]] = rng.poisson(0.5, m)
        X[:, col["is_guest_login"]] = rng.random(m) < 0.4
    elif fam == "U2R":
        svc_p[SERVICES.index("telnet")] = 10
        X[:, col["root_shell"]] = rng.random(m) < 0.6
        X[:, col["num_file_creations"]] = rng.poisson(3, m)
    cats = {
        "protocol_type": rng.choice(PROTOCOLS, m, p=proto_p / proto_p.sum()),
        "service": rng.choice(SERVICES, m, p=svc_p / svc_p.sum()),
        "flag": rng.choice(FLAGS, m, p=flag_p / flag_p.sum()),
    }
    return X, cats


def make_raw(n_records=2000, seed=0, mix=None) -> RawDataset:
    rng = np.random.default_rng(seed)
    mix = mix or DEFAULT_MIX
    fams = list(mix)
    p = np.array([mix[f] for f in fams], dtype=float)
    counts = rng.multinomial(n_records, p / p.sum())
    blocks, cats, labels = [], {c: [] for c in CATEGORICAL_FEATURES}, []
    for fam, m in zip(fams, counts):
        if m == 0:
            continue
        X, c = _family_columns(fam, m, rng)
        blocks.append(X)
        for k in CATEGORICAL_FEATURES:
            cats[k].append(c[k])
        if fam == "normal":
            labels.append(np.array(["normal"] * m, dtype=object))
        else:
            labels.append(rng.choice(FAMILY_ATTACKS[fam], m).astype(object))
    order = rng.permutation(n_records)
    numeric = np.round(np.vstack(blocks), 2)[order]
    return RawDataset(
        numeric=numeric,
        categorical={k: np.concatenate(v).astype(object)[order] for k, v in cats.items()},
        attack_label=np.concatenate(labels)[order],
        difficulty=rng.integers(0, 22, n_records),
        source="synthetic",
    )


def write_synthetic_dir(out_dir, n_train=4000, n_test=1500, seed=0):
    """Write KDDTrain+/KDDTest+/20Percent/KDDTest-21 lookalikes into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    train = make_raw(n_train, seed)
    test = make_raw(n_test, seed + 1)
    write_nslkdd(os.path.join(out_dir, "KDDTrain+.txt"), train)
    write_nslkdd(os.path.join(out_dir, "KDDTrain+_20Percent.txt"),
                 train.take(np.arange(len(train) // 5)))
    write_nslkdd(os.path.join(out_dir, "KDDTest+.txt"), test)
    hard = np.flatnonzero(test.difficulty < 21)
    write_nslkdd(os.path.join(out_dir, "KDDTest-21.txt"), test.take(hard))
    return out_dir
