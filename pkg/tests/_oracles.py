"""Independent reference computations used as test oracles.

Each function here re-derives a quantity by the most literal route available
(explicit loops, enumeration, finite differences) and shares no code with the
package path it checks.
"""

import itertools
import math

import numpy as np


def central_diff(f, arr, h=1e-5):
    """Central finite-difference gradient of scalar ``f()`` w.r.t. ``arr`` (perturbed in place)."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def rel_error(a, b, floor=1e-8):
    """Tensor relative error ||a - b|| / max(||a|| + ||b||, floor)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), floor))


def replay_cgo_mu(target, source, sim, theta, axis="row", renormalize=False):
    """Literal double-loop replay of the guidance algorithm.

    Loops run over 0..M-1, collisions (same counterpart for p and q) are
    skipped, and argmax ties go to the lowest index.
    """
    b_prime = [list(map(float, row)) for row in np.asarray(target)]
    a = [list(map(float, row)) for row in np.asarray(source)]
    c = [list(map(float, row)) for row in np.asarray(sim)]
    m = len(a)
    masked = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            if a[i][j] > theta:
                masked[i][j] = a[i][j]

    def argmax(p):
        vec = c[p] if axis == "row" else [row[p] for row in c]
        best = 0
        for k in range(1, len(vec)):
            if vec[k] > vec[best]:
                best = k
        return best

    for p in range(m):
        for q in range(m):
            if masked[p][q] != 0:
                i1, i2 = argmax(p), argmax(q)
                if i1 != i2:
                    b_prime[i1][i2] += a[p][q]
    n = len(b_prime)
    if renormalize:
        out = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i != j:
                    tot = b_prime[i][j] + b_prime[j][i]
                    out[i][j] = b_prime[i][j] / tot if tot > 0 else 0.5
        b_prime = out
    for i in range(n):
        b_prime[i][i] = 0.0
    return np.array(b_prime)


def brute_inversions(pred, gold):
    pos_p = {e: i for i, e in enumerate(pred)}
    pos_g = {e: i for i, e in enumerate(gold)}
    inv = 0
    for x, y in itertools.combinations(gold, 2):
        if (pos_p[x] < pos_p[y]) != (pos_g[x] < pos_g[y]):
            inv += 1
    return inv


def brute_tau(pred, gold):
    n = len(gold)
    return 1 - 2 * brute_inversions(pred, gold) / math.comb(n, 2)


def loss_by_loops(matrix, order):
    """Mean over unordered pairs of -log softmax(m_kl, m_lk) in the gold direction."""
    n = len(order)
    pos = {e: i for i, e in enumerate(order)}
    total = 0.0
    for k in range(n):
        for l in range(n):
            if k != l and pos[k] < pos[l]:
                a, b = matrix[k][l], matrix[l][k]
                total += -(a - math.log(math.exp(a) + math.exp(b)))
    return total / (n * (n - 1) / 2)


def encoder_by_loops(x, blocks, heads):
    """Scratch forward pass: per element, per head, softmax(q k^T / sqrt(dk)) v."""
    x = np.array(x, dtype=np.float64)
    n, d = x.shape
    dk = d // heads

    def ln(v, g, b):
        mu = sum(v) / len(v)
        var = sum((t - mu) ** 2 for t in v) / len(v)
        return np.array([(t - mu) / math.sqrt(var + 1e-5) for t in v]) * g + b

    def gelu(z):
        return 0.5 * z * (1 + math.tanh(math.sqrt(2 / math.pi) * (z + 0.044715 * z ** 3)))

    for p in blocks:
        h = np.array([ln(x[i], p["ln1_g"], p["ln1_b"]) for i in range(n)])
        q, k, v = h @ p["wq"], h @ p["wk"], h @ p["wv"]
        concat = np.zeros((n, d))
        for head in range(heads):
            sl = slice(head * dk, (head + 1) * dk)
            for i in range(n):
                logits = [float(q[i, sl] @ k[j, sl]) / math.sqrt(dk) for j in range(n)]
                mx = max(logits)
                w = [math.exp(t - mx) for t in logits]
                z = sum(w)
                concat[i, sl] = sum((w[j] / z) * v[j, sl] for j in range(n))
        x1 = x + concat @ p["wo"] + p["bo"]
        out = np.zeros_like(x1)
        for i in range(n):
            h2 = ln(x1[i], p["ln2_g"], p["ln2_b"])
            hidden = np.array([gelu(t) for t in h2 @ p["w1"] + p["b1"]])
            out[i] = x1[i] + hidden @ p["w2"] + p["b2"]
        x = out
    return x


def consistent_matrix(rng, n):
    """Order matrix with noiseless margins: m_kl = sigmoid(scale * (x_l - x_k)).

    Smaller latent ``x`` comes first. Returns (matrix, gold order list).
    """
    x = rng.normal(size=n)
    while len(set(np.round(x, 12))) < n:
        x = rng.normal(size=n)
    scale = rng.uniform(0.5, 10.0)
    m = 1.0 / (1.0 + np.exp(-scale * (x[None, :] - x[:, None])))
    np.fill_diagonal(m, 0.0)
    return m, [int(i) for i in np.argsort(x)]
