"""Compiled kernels for exact-greedy regression trees.

A tree is stored as flat arrays: feature (-1 marks a leaf), threshold,
left/right child indices (tree-local), and a (q,)-vector of leaf values per
node. Splits maximize weighted variance reduction summed over the q target
columns, searched over midpoints of sorted adjacent distinct values; ties go
to the lower feature index, then the lower threshold. Multi-output targets
make the same kernel serve squared-error boosting (q=1) and gini-style
class-distribution trees (one-hot targets: total one-hot variance equals the
gini impurity).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def grow_tree(X, order, Y, w, max_depth, min_samples_leaf, max_features, seed):
    n, d = X.shape
    q = Y.shape[1]
    if seed >= 0:
        np.random.seed(seed)

    if max_depth >= 30:
        cap = 2 * n + 1
    else:
        cap = 2 ** (max_depth + 1) - 1
        if cap > 2 * n + 1:
            cap = 2 * n + 1
    if cap < 1:
        cap = 1

    feature = np.full(cap, -1, np.int32)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    value = np.zeros((cap, q), np.float64)

    node_of = np.zeros(n, np.int32)
    n_nodes = 1

    level_nodes = np.empty(cap, np.int32)
    next_nodes = np.empty(cap, np.int32)
    level_nodes[0] = 0
    n_active = 1

    loc_of = np.full(cap, -1, np.int32)
    seg = np.empty(n, np.int64)
    sl = np.empty(q, np.float64)

    depth = 0
    while n_active > 0:
        for a in range(n_active):
            loc_of[level_nodes[a]] = a

        counts = np.zeros(n_active, np.int64)
        wsum = np.zeros(n_active, np.float64)
        ysum = np.zeros((n_active, q), np.float64)
        for s in range(n):
            nd = node_of[s]
            if nd >= 0:
                a = loc_of[nd]
                counts[a] += 1
                wsum[a] += w[s]
                for k in range(q):
                    ysum[a, k] += w[s] * Y[s, k]
        for a in range(n_active):
            nd = level_nodes[a]
            if wsum[a] > 0.0:
                for k in range(q):
                    value[nd, k] = ysum[a, k] / wsum[a]
            # zero-weight nodes keep the value inherited from their parent

        best_gain = np.zeros(n_active, np.float64)
        best_feat = np.full(n_active, -1, np.int32)
        best_thr = np.zeros(n_active, np.float64)

        if depth < max_depth and d > 0:
            parent_score = np.zeros(n_active, np.float64)
            for a in range(n_active):
                if wsum[a] > 0.0:
                    ps = 0.0
                    for k in range(q):
                        ps += ysum[a, k] * ysum[a, k]
                    parent_score[a] = ps / wsum[a]

            subsample = 0 < max_features < d
            use_feat = np.ones((n_active if subsample else 1, d), np.uint8)
            if subsample:
                idx = np.empty(d, np.int32)
                for a in range(n_active):
                    for j in range(d):
                        idx[j] = j
                        use_feat[a, j] = 0
                    for j in range(max_features):
                        r = j + np.random.randint(0, d - j)
                        tmp = idx[j]
                        idx[j] = idx[r]
                        idx[r] = tmp
                        use_feat[a, idx[j]] = 1

            seg_start = np.zeros(n_active + 1, np.int64)
            for a in range(n_active):
                seg_start[a + 1] = seg_start[a] + counts[a]
            cursor = np.empty(n_active, np.int64)

            for f in range(d):
                for a in range(n_active):
                    cursor[a] = seg_start[a]
                for pos in range(n):
                    s = order[f, pos]
                    nd = node_of[s]
                    if nd >= 0:
                        a = loc_of[nd]
                        seg[cursor[a]] = s
                        cursor[a] += 1

                for a in range(n_active):
                    if subsample and use_feat[a, f] == 0:
                        continue
                    lo = seg_start[a]
                    hi = seg_start[a + 1]
                    m = hi - lo
                    if m < 2 * min_samples_leaf or wsum[a] <= 0.0:
                        continue
                    min_gain = 1e-12 * (1.0 + parent_score[a])
                    for k in range(q):
                        sl[k] = 0.0
                    wl = 0.0
                    cl = 0
                    for i in range(lo, hi - 1):
                        s = seg[i]
                        ws = w[s]
                        wl += ws
                        cl += 1
                        for k in range(q):
                            sl[k] += ws * Y[s, k]
                        xc = X[s, f]
                        xn = X[seg[i + 1], f]
                        if xn <= xc:
                            continue
                        if cl < min_samples_leaf or (m - cl) < min_samples_leaf:
                            continue
                        wr = wsum[a] - wl
                        if wl <= 0.0 or wr <= 0.0:
                            continue
                        score = 0.0
                        for k in range(q):
                            sr = ysum[a, k] - sl[k]
                            score += sl[k] * sl[k] / wl + sr * sr / wr
                        gain = score - parent_score[a]
                        if gain > best_gain[a] and gain > min_gain:
                            thr = 0.5 * (xc + xn)
                            if thr >= xn:
                                thr = xc
                            best_gain[a] = gain
                            best_feat[a] = f
                            best_thr[a] = thr

        new_count = 0
        for a in range(n_active):
            nd = level_nodes[a]
            if best_feat[a] >= 0 and n_nodes + 2 <= cap:
                feature[nd] = best_feat[a]
                threshold[nd] = best_thr[a]
                l = n_nodes
                r = n_nodes + 1
                n_nodes += 2
                left[nd] = l
                right[nd] = r
                for k in range(q):
                    value[l, k] = value[nd, k]
                    value[r, k] = value[nd, k]
                next_nodes[new_count] = l
                new_count += 1
                next_nodes[new_count] = r
                new_count += 1

        for s in range(n):
            nd = node_of[s]
            if nd >= 0:
                if feature[nd] >= 0:
                    if X[s, feature[nd]] <= threshold[nd]:
                        node_of[s] = left[nd]
                    else:
                        node_of[s] = right[nd]
                else:
                    node_of[s] = -1

        for a in range(n_active):
            loc_of[level_nodes[a]] = -1
        for a in range(new_count):
            level_nodes[a] = next_nodes[a]
        n_active = new_count
        depth += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True)
def predict_into(features, thresholds, lefts, rights, values, offsets, X, scale, out):
    """Accumulate scale * (sum of per-tree leaf vectors) into out (m, q)."""
    m = X.shape[0]
    q = values.shape[1]
    n_trees = offsets.shape[0] - 1
    for t in range(n_trees):
        base = offsets[t]
        for i in range(m):
            node = 0
            while features[base + node] >= 0:
                if X[i, features[base + node]] <= thresholds[base + node]:
                    node = lefts[base + node]
                else:
                    node = rights[base + node]
            for k in range(q):
                out[i, k] += scale * values[base + node, k]
    return out


def presort(X):
    """Per-feature stable argsort, shared by every tree grown on X."""
    n, d = X.shape
    order = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        order[f] = np.argsort(X[:, f], kind="stable")
    return order


class TreeArrays:
    """One grown tree plus helpers to pack ensembles for the predict kernel."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def predict(self, X, scale=1.0, out=None):
        if out is None:
            out = np.zeros((X.shape[0], self.value.shape[1]))
        offsets = np.array([0, self.n_nodes], dtype=np.int64)
        return predict_into(
            self.feature, self.threshold, self.left, self.right, self.value, offsets, X, scale, out
        )

    def to_nodes(self):
        """Flat node list: internal [feature, threshold, left, right], leaf [value...]."""
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                nodes.append(
                    [int(self.feature[i]), float(self.threshold[i]), int(self.left[i]), int(self.right[i])]
                )
            else:
                nodes.append([float(v) for v in self.value[i]])
        return nodes

    @staticmethod
    def from_nodes(nodes, n_outputs=1):
        n = len(nodes)
        feature = np.full(n, -1, np.int32)
        threshold = np.zeros(n, np.float64)
        left = np.full(n, -1, np.int32)
        right = np.full(n, -1, np.int32)
        value = np.zeros((n, n_outputs), np.float64)
        for i, node in enumerate(nodes):
            # internal nodes carry an integer feature index first; leaves are floats
            if len(node) == 4 and isinstance(node[0], int):
                feature[i] = int(node[0])
                threshold[i] = float(node[1])
                left[i] = int(node[2])
                right[i] = int(node[3])
            elif len(node) == n_outputs:
                value[i] = [float(v) for v in node]
            else:
                from ..exceptions import FormatError

                raise FormatError(f"malformed tree node of arity {len(node)}")
        return TreeArrays(feature, threshold, left, right, value)


def pack_trees(trees, n_outputs):
    """Concatenate trees into kernel-ready arrays (features, ..., offsets)."""
    if not trees:
        empty_i = np.empty(0, np.int32)
        return (
            empty_i,
            np.empty(0, np.float64),
            empty_i.copy(),
            empty_i.copy(),
            np.empty((0, n_outputs), np.float64),
            np.zeros(1, np.int64),
        )
    features = np.concatenate([t.feature for t in trees])
    thresholds = np.concatenate([t.threshold for t in trees])
    lefts = np.concatenate([t.left for t in trees])
    rights = np.concatenate([t.right for t in trees])
    values = np.concatenate([t.value for t in trees])
    offsets = np.zeros(len(trees) + 1, np.int64)
    for i, t in enumerate(trees):
        offsets[i + 1] = offsets[i] + t.n_nodes
    return features, thresholds, lefts, rights, values, offsets
