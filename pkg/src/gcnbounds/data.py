"""Dataset containers, text-file ingestion and a contextual-SBM generator.

File formats (all plain text, documented with examples in the README):

* edges:    one ``u v`` pair per line, 0-indexed, ``#`` comments allowed
* features: CSV, row i holds the comma-separated features of node i
* labels:   ``node_index label_string`` per line
* split:    ``node_index {train|test}`` per line

Multi-class label files are reduced to binary +-1 labels because the model
head is a single real output: either the largest class against the rest
(default) or one named class against another on the induced subgraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DimensionError, DomainError
from .graphs import Graph, parse_edges
from .linalg import frobenius_norm
from .rng import substream

__all__ = ["Dataset", "CsbmParams", "load_dataset", "gen_csbm", "split"]


@dataclass(frozen=True)
class Dataset:
    """Graph, node features, +-1 labels and a disjoint train/test split."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train_indices: tuple
    test_indices: tuple
    y_min: float = -1.0
    y_max: float = 1.0
    c_x: float = field(init=False)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        n = self.graph.num_nodes
        if feats.ndim != 2 or feats.shape[0] != n:
            raise DimensionError(f"features must be (N={n}, d0), got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise DataFormatError("features contain non-finite values")
        if labels.shape != (n,):
            raise DimensionError(f"labels must have shape ({n},), got {labels.shape}")
        if self.y_min >= self.y_max:
            raise DomainError(f"invalid label range [{self.y_min}, {self.y_max}]")
        if np.any(labels < self.y_min) or np.any(labels > self.y_max):
            raise DomainError("labels fall outside the configured range")
        train = tuple(int(i) for i in self.train_indices)
        test = tuple(int(i) for i in self.test_indices)
        for idx in train + test:
            if not (0 <= idx < n):
                raise DimensionError(f"split index {idx} out of range for {n} nodes")
        if set(train) & set(test):
            raise DomainError("train and test index sets overlap")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "test_indices", test)
        object.__setattr__(self, "c_x", frobenius_norm(feats))

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_train(self) -> int:
        return len(self.train_indices)

    def train_samples(self) -> tuple:
        """(node, label) pairs of the training set, in index order."""
        return tuple((i, float(self.labels[i])) for i in self.train_indices)


@dataclass(frozen=True)
class CsbmParams:
    """Two-community contextual stochastic block model at desk scale."""

    num_nodes: int = 300
    p_in: float = 0.1
    p_out: float = 0.02
    feature_dim: int = 16
    mean_separation: float = 1.0
    noise_scale: float = 0.5
    train_fraction: float = 0.1

    def __post_init__(self):
        if self.num_nodes < 4:
            raise DomainError(f"need at least 4 nodes, got {self.num_nodes}")
        if not (0.0 <= self.p_out <= self.p_in <= 1.0) or self.p_in == 0.0:
            raise DomainError(
                f"need 0 <= p_out <= p_in <= 1 with p_in > 0, got p_in={self.p_in}, p_out={self.p_out}")
        if not (0.0 < self.train_fraction < 1.0):
            raise DomainError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.feature_dim < 1:
            raise DomainError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.noise_scale < 0:
            raise DomainError(f"noise_scale must be >= 0, got {self.noise_scale}")


_CSBM_RETRY_BUDGET = 100


def gen_csbm(params: CsbmParams, seed: int) -> Dataset:
    """Generate a two-class CSBM dataset with min degree >= 1.

    Edges are redrawn (up to a bounded retry budget) until no node is
    isolated, so degree-normalized filters are always constructible.
    Features are (+-1) * mean_separation * u + noise_scale * gaussian with a
    fixed seeded direction u; labels are exactly +-1.
    """
    n = params.num_nodes
    half = n // 2
    labels = np.ones(n)
    labels[half:] = -1.0

    dir_rng = substream(seed, "csbm-direction")
    u = dir_rng.standard_normal(params.feature_dim)
    u /= np.linalg.norm(u)
    feat_rng = substream(seed, "csbm-features")
    noise = feat_rng.standard_normal((n, params.feature_dim))
    features = labels[:, None] * params.mean_separation * u + params.noise_scale * noise

    edge_rng = substream(seed, "csbm-edges")
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, params.p_in, params.p_out)
    graph = None
    for _ in range(_CSBM_RETRY_BUDGET):
        draws = edge_rng.random((n, n))
        mask = np.triu(draws < prob, k=1)
        us, vs = np.nonzero(mask)
        candidate = Graph(num_nodes=n, edges=tuple(zip(us.tolist(), vs.tolist())))
        if candidate.num_edges and candidate.degrees().min() >= 1:
            graph = candidate
            break
    if graph is None:
        raise DomainError(
            f"could not draw a graph with min degree >= 1 in {_CSBM_RETRY_BUDGET} "
            "attempts; increase p_out or p_in")

    base = Dataset(graph=graph, features=features, labels=labels,
                   train_indices=tuple(range(n)), test_indices=())
    return split(base, params.train_fraction, seed)


def split(dataset: Dataset, train_fraction: float, seed: int) -> Dataset:
    """Class-stratified seeded split covering every node.

    Per class, indices are shuffled and allocated by largest remainder so
    the train side totals round(fraction * N); every class keeps at least
    one node on each side. A class with fewer than 2 nodes is an error.
    """
    if not (0.0 < train_fraction < 1.0):
        raise DomainError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = dataset.labels
    classes = sorted(set(labels.tolist()))
    rng = substream(seed, "split-shuffle")
    n = dataset.num_nodes
    target_total = int(round(train_fraction * n))

    per_class = []
    for cls in classes:
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise DomainError(f"class {cls} has {idx.size} node(s); need at least 2 to split")
        perm = idx[rng.permutation(idx.size)]
        quota = train_fraction * idx.size
        per_class.append([perm, int(np.floor(quota)), quota - np.floor(quota)])

    assigned = sum(base for _, base, _ in per_class)
    order = sorted(range(len(per_class)), key=lambda i: (-per_class[i][2], i))
    for i in order:
        if assigned >= target_total:
            break
        per_class[i][1] += 1
        assigned += 1

    train, test = [], []
    for perm, take, _ in per_class:
        take = min(max(take, 1), perm.size - 1)  # both sides stay non-empty
        train.extend(int(v) for v in perm[:take])
        test.extend(int(v) for v in perm[take:])
    return Dataset(graph=dataset.graph, features=dataset.features, labels=dataset.labels,
                   train_indices=tuple(sorted(train)), test_indices=tuple(sorted(test)),
                   y_min=dataset.y_min, y_max=dataset.y_max)


# text-file ingestion ----------------------------------------------------------

def _read_features(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: non-numeric feature value in {line!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {width} features, got {len(row)}")
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def _read_keyed_lines(path, n: int, what: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 'node_index {what}', got {raw.strip()!r}")
            try:
                node = int(parts[0])
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: non-integer node index {parts[0]!r}") from None
            if not (0 <= node < n):
                raise DataFormatError(
                    f"{path}:{lineno}: node {node} out of range for {n} nodes")
            if node in out:
                raise DataFormatError(f"{path}:{lineno}: duplicate entry for node {node}")
            out[node] = parts[1]
    return out


def load_dataset(edge_path, feature_path, label_path, split_path, *,
                 reduction: str = "largest_vs_rest",
                 class_a: str | None = None, class_b: str | None = None) -> Dataset:
    """Load a dataset from the four text files.

    ``reduction`` maps the label classes onto {-1, +1}:
      ``largest_vs_rest``   most frequent class -> +1, everything else -> -1
      ``class_vs_class``    keep only class_a (+1) and class_b (-1) nodes and
                            induce the subgraph on them
    """
    features = _read_features(feature_path)
    n = features.shape[0]
    with open(edge_path, "r", encoding="utf-8") as fh:
        max_node, edges = parse_edges(fh, source=str(edge_path))
    if max_node >= n:
        raise DataFormatError(
            f"{edge_path}: node {max_node} exceeds feature row count {n}")
    graph = Graph(num_nodes=n, edges=tuple(edges))

    raw_labels = _read_keyed_lines(label_path, n, "label_string")
    missing = [i for i in range(n) if i not in raw_labels]
    if missing:
        raise DataFormatError(f"{label_path}: node {missing[0]} has no label "
                              f"({len(missing)} unlabeled nodes total)")
    raw_split = _read_keyed_lines(split_path, n, "train|test")
    for node, tag in raw_split.items():
        if tag not in ("train", "test"):
            raise DataFormatError(
                f"{split_path}: node {node} has unknown split tag {tag!r}")

    class_names = sorted(set(raw_labels.values()))
    if reduction == "largest_vs_rest":
        counts = {c: 0 for c in class_names}
        for c in raw_labels.values():
            counts[c] += 1
        positive = max(class_names, key=lambda c: (counts[c], c))
        labels = np.array([1.0 if raw_labels[i] == positive else -1.0 for i in range(n)])
        keep = None
    elif reduction == "class_vs_class":
        if class_a is None or class_b is None:
            raise DomainError("class_vs_class reduction needs class_a and class_b")
        for cls in (class_a, class_b):
            if cls not in class_names:
                raise DomainError(
                    f"unknown label class {cls!r}; file has classes {class_names}")
        keep = [i for i in range(n) if raw_labels[i] in (class_a, class_b)]
        labels = np.array([1.0 if raw_labels[i] == class_a else -1.0 for i in keep])
    else:
        raise DomainError(f"unknown label reduction {reduction!r}")

    if keep is None:
        train = tuple(sorted(i for i, t in raw_split.items() if t == "train"))
        test = tuple(sorted(i for i, t in raw_split.items() if t == "test"))
        return Dataset(graph=graph, features=features, labels=labels,
                       train_indices=train, test_indices=test)

    # induced subgraph on the two kept classes, nodes renumbered in keep order
    remap = {old: new for new, old in enumerate(keep)}
    sub_edges = tuple((remap[u], remap[v]) for (u, v) in graph.edges
                      if u in remap and v in remap)
    sub_graph = Graph(num_nodes=len(keep), edges=sub_edges)
    train = tuple(sorted(remap[i] for i, t in raw_split.items()
                         if t == "train" and i in remap))
    test = tuple(sorted(remap[i] for i, t in raw_split.items()
                        if t == "test" and i in remap))
    return Dataset(graph=sub_graph, features=features[keep], labels=labels,
                   train_indices=train, test_indices=test)
