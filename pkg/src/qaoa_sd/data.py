"""NSL-KDD ingestion: parsing, categorical encoding and attack-family filtering.

The NSL-KDD text files are headerless CSV with 43 fields per record: the 41
connection features in canonical order, the attack label and a difficulty
score.
"""

import csv
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .infotheory import information_gain

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
)
CATEGORICAL_FEATURES = ("protocol_type", "service", "flag")
NUMERIC_FEATURES = tuple(f for f in FEATURE_NAMES if f not in CATEGORICAL_FEATURES)
N_FIELDS = len(FEATURE_NAMES) + 2

ATTACK_FAMILIES = ("DoS", "Probe", "R2L", "U2R")
FILTER_MODES = ("all",) + ATTACK_FAMILIES

# Attack name -> family. Covers the training attacks plus the novel attacks that
# only occur in KDDTest+ / KDDTest-21.
ATTACK_FAMILY = {
    "back": "DoS", "land": "DoS", "neptune": "DoS", "pod": "DoS", "smurf": "DoS",
    "teardrop": "DoS", "apache2": "DoS", "mailbomb": "DoS", "processtable": "DoS",
    "udpstorm": "DoS",
    "ipsweep": "Probe", "nmap": "Probe", "portsweep": "Probe", "satan": "Probe",
    "mscan": "Probe", "saint": "Probe",
    "ftp_write": "R2L", "guess_passwd": "R2L", "imap": "R2L", "multihop": "R2L", "phf": "R2L",
    "spy": "R2L", "warezclient": "R2L", "warezmaster": "R2L", "named": "R2L",
    "sendmail": "R2L", "snmpgetattack": "R2L", "snmpguess": "R2L", "worm": "R2L",
    "xlock": "R2L", "xsnoop": "R2L",
    "buffer_overflow": "U2R", "loadmodule": "U2R", "perl": "U2R", "rootkit": "U2R",
    "httptunnel": "U2R", "ps": "U2R", "sqlattack": "U2R", "xterm": "U2R",
}

EVAL_MODES = ("full", "20pct", "train_only", "hard")
TRAIN_FILES = {"full": "KDDTrain+.txt", "20pct": "KDDTrain+_20Percent.txt",
               "train_only": "KDDTrain+.txt", "hard": "KDDTrain+.txt"}
TEST_FILES = {"full": "KDDTest+.txt", "20pct": "KDDTest+.txt", "train_only": None,
              "hard": "KDDTest-21.txt"}

LOW_CARDINALITY = 5


class NSLKDDParseError(ValueError):
    pass


@dataclass(frozen=True)
class RawDataset:
    """Parsed NSL-KDD records, column-major."""
    numeric: np.ndarray             # N x 38 float
    categorical: Dict[str, np.ndarray]  # name -> N strings
    attack_label: np.ndarray        # N strings
    difficulty: np.ndarray          # N int
    source: str = ""

    def __len__(self):
        return self.attack_label.shape[0]

    @property
    def is_attack(self):
        return (self.attack_label != "normal").astype(np.int8)

    @property
    def family(self):
        return np.array([family_of(a) for a in self.attack_label], dtype=object)

    def take(self, idx):
        return RawDataset(self.numeric[idx], {k: v[idx] for k, v in self.categorical.items()},
                          self.attack_label[idx], self.difficulty[idx], self.source)


def family_of(label):
    if label == "normal":
        return "normal"
    return ATTACK_FAMILY[label]


def resolve_files(data_dir, mode):
    """Training and evaluation file paths for an evaluation mode.

    ``train_only`` has no separate evaluation file (None).
    """
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown eval mode {mode!r}; expected one of {EVAL_MODES}")
    test = TEST_FILES[mode]
    return (os.path.join(data_dir, TRAIN_FILES[mode]),
            os.path.join(data_dir, test) if test else None)


def load_nslkdd(path, mode="full"):
    """Parse one NSL-KDD text file.

    ``mode`` is only validated here; which file serves which role is decided
    by :func:`resolve_files`.
    """
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown eval mode {mode!r}")
    numeric, cats, labels, diff = [], {c: [] for c in CATEGORICAL_FEATURES}, [], []
    cat_idx = [FEATURE_NAMES.index(c) for c in CATEGORICAL_FEATURES]
    num_idx = [FEATURE_NAMES.index(c) for c in NUMERIC_FEATURES]
    unknown = set()
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != N_FIELDS:
                raise NSLKDDParseError(
                    f"{path}:{lineno}: expected {N_FIELDS} fields, got {len(row)}")
            try:
                numeric.append([float(row[i]) for i in num_idx])
                diff.append(int(row[-1]))
            except ValueError as exc:
                raise NSLKDDParseError(f"{path}:{lineno}: {exc}") from None
            for name, i in zip(CATEGORICAL_FEATURES, cat_idx):
                cats[name].append(row[i].strip())
            label = row[-2].strip()
            if label != "normal" and label not in ATTACK_FAMILY:
                unknown.add(label)
            labels.append(label)
    if unknown:
        raise NSLKDDParseError(f"{path}: unknown attack label(s): {', '.join(sorted(unknown))}")
    n = len(labels)
    return RawDataset(
        numeric=np.asarray(numeric, dtype=float).reshape(n, len(NUMERIC_FEATURES)),
        categorical={k: np.asarray(v, dtype=object) for k, v in cats.items()},
        attack_label=np.asarray(labels, dtype=object),
        difficulty=np.asarray(diff, dtype=int),
        source=str(path),
    )


def write_nslkdd(path, raw):
    """Write a RawDataset back to the headerless 43-field format."""
    cat_pos = {FEATURE_NAMES.index(c): c for c in CATEGORICAL_FEATURES}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in range(len(raw)):
            row, j = [], 0
            for i in range(len(FEATURE_NAMES)):
                if i in cat_pos:
                    row.append(raw.categorical[cat_pos[i]][r])
                else:
                    v = raw.numeric[r, j]
                    row.append(repr(int(v)) if float(v).is_integer() else repr(float(v)))
                    j += 1
            row += [raw.attack_label[r], int(raw.difficulty[r])]
            w.writerow(row)


@dataclass(frozen=True)
class EncodedDataset:
    matrix: np.ndarray          # N x M float
    column_names: List[str]
    labels: np.ndarray          # N int8, 1 = attack
    categories: np.ndarray      # N family tags ("normal", "DoS", ...)

    def __len__(self):
        return self.labels.shape[0]

    def take(self, idx):
        return EncodedDataset(self.matrix[idx], list(self.column_names), self.labels[idx],
                              self.categories[idx])


@dataclass
class CategoricalEncoder:
    """Per-feature retained categories, fitted on training data."""
    kept: Dict[str, List[str]] = field(default_factory=dict)
    ig_coverage: float = 0.9

    @property
    def column_names(self):
        names = []
        for f in FEATURE_NAMES:
            if f in CATEGORICAL_FEATURES:
                names += [f"{f}_{c}" for c in self.kept[f]]
            else:
                names.append(f)
        return names

    def transform(self, raw: RawDataset) -> EncodedDataset:
        cols, j = [], 0
        for f in FEATURE_NAMES:
            if f in CATEGORICAL_FEATURES:
                values = raw.categorical[f]
                for c in self.kept[f]:
                    cols.append((values == c).astype(float))
            else:
                cols.append(raw.numeric[:, j])
                j += 1
        n = len(raw)
        matrix = np.column_stack(cols) if cols else np.zeros((n, 0))
        return EncodedDataset(matrix.reshape(n, len(cols)), self.column_names, raw.is_attack,
                              raw.family)


def select_categories(values, y, ig_coverage):
    """Categories of one column to keep as one-hot indicators.

    Low-cardinality columns keep everything (sorted by name). Otherwise
    categories are ranked by the IG of their indicator (descending, ties by
    name) and the shortest prefix reaching ``ig_coverage`` of the summed IG
    is kept.
    """
    cats = sorted(set(values))
    if len(cats) <= LOW_CARDINALITY:
        return cats
    gains = {c: information_gain(values == c, y) for c in cats}
    ranked = sorted(cats, key=lambda c: (-gains[c], c))
    total = sum(gains.values())
    if total <= 0.0:
        return ranked[:1]
    kept, acc = [], 0.0
    for c in ranked:
        kept.append(c)
        acc += gains[c]
        # tolerance so that coverage=1 is reachable despite summation order
        if acc >= ig_coverage * total - 1e-12 * total:
            break
    return kept


def fit_categorical_encoder(raw: RawDataset, ig_coverage=0.9) -> CategoricalEncoder:
    if not 0.0 < ig_coverage <= 1.0:
        raise ValueError("ig_coverage must lie in (0, 1]")
    y = raw.is_attack
    kept = {}
    for f in CATEGORICAL_FEATURES:
        values = raw.categorical[f]
        if len(set(values)) == 1:
            logger.warning("categorical column %s has a single value; emitting a constant column", f)
        kept[f] = select_categories(values, y, ig_coverage)
    return CategoricalEncoder(kept=kept, ig_coverage=ig_coverage)


def encode_categoricals(raw: RawDataset, ig_coverage=0.9):
    """Fit the categorical encoder on ``raw`` and transform it.

    Returns ``(encoded, encoder)``; reuse ``encoder.transform`` for test data.
    """
    enc = fit_categorical_encoder(raw, ig_coverage)
    return enc.transform(raw), enc


def filter_attacks(ds: EncodedDataset, mode="all") -> EncodedDataset:
    """Keep normal records plus one attack family; labels recomputed."""
    if mode not in FILTER_MODES:
        raise ValueError(f"unknown attack filter {mode!r}; expected one of {FILTER_MODES}")
    if mode == "all":
        out = ds
    else:
        keep = (ds.categories == "normal") | (ds.categories == mode)
        idx = np.flatnonzero(keep)
        out = EncodedDataset(ds.matrix[idx], list(ds.column_names),
                             (ds.categories[idx] == mode).astype(np.int8), ds.categories[idx])
    if len(out) and not out.labels.any():
        raise ValueError(f"attack filter {mode!r} leaves no attack records")
    return out


def load_split(train_path, test_path: Optional[str], mode="full", seed=0, holdout=0.2):
    """Load the raw training and evaluation sets for an evaluation mode.

    ``train_only`` has no evaluation file: a seeded random ``holdout`` fraction
    of the training file is held out instead.
    """
    train = load_nslkdd(train_path, mode)
    if mode == "train_only" or test_path is None:
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(train))
        n_hold = int(round(holdout * len(train)))
        return train.take(np.sort(perm[n_hold:])), train.take(np.sort(perm[:n_hold]))
    return train, load_nslkdd(test_path, mode)


def attack_rate(raw: RawDataset):
    return float(raw.is_attack.mean()) if len(raw) else float("nan")


def family_counts(labels: Sequence[str]):
    out = {}
    for lab in labels:
        fam = family_of(lab)
        out[fam] = out.get(fam, 0) + 1
    return out
