"""Independent reference computations shared by several test modules."""
import numpy as np


def joint_scores(scores, w):
    """Score of every tuple as a dense (S, V, O, P, L) array, built by broadcasting."""
    ts, tv, to, tp, tl = (np.asarray(s, dtype=float) for s in scores)
    S, V, O, P, L = np.ix_(*(np.arange(len(s)) for s in (ts, tv, to, tp, tl)))
    return (ts[S] + tv[V] + to[O] + tp[P] + tl[L] + w.effective("start")[L] + w.effective("ls")[L, S]
            + w.effective("lo")[L, O] + w.effective("lp")[L, P] + w.effective("sv")[S, V])


def brute_log_partition(scores, w):
    vals = joint_scores(scores, w).ravel()
    m = vals.max()
    return m + np.log(np.sum(np.exp(vals - m)))


def brute_argmax(scores, w, allowed=None):
    """Best tuple by exhaustive search; None when every tuple is forbidden."""
    joint = joint_scores(scores, w)
    if allowed is not None:
        ok = np.array([allowed(t) for t in np.ndindex(joint.shape)]).reshape(joint.shape)
        joint = np.where(ok, joint, -np.inf)
    k = int(np.argmax(joint))
    if not np.isfinite(joint.flat[k]):
        return None, -np.inf
    return tuple(int(i) for i in np.unravel_index(k, joint.shape)), float(joint.flat[k])


def random_instance(rng, sizes, masked=False):
    from qsrevents.learn import TABLES, TreeCrfWeights

    scores = [rng.normal(size=n) for n in sizes]
    w = TreeCrfWeights.random(rng, sizes)
    if masked:
        masks = {}
        for name in TABLES:
            m = rng.random(getattr(w, name).shape) < 0.7
            m.flat[rng.integers(m.size)] = True
            masks[name] = m
        w = w.with_masks(masks)
    return scores, w


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


def qtc_oracle(k0, k1, l0, l1, theta, beta):
    """QTC_C slot rules evaluated in a frame where the line k->l is the +x axis."""
    k0, k1, l0, l1 = map(np.asarray, (k0, k1, l0, l1))
    kl = l0 - k0
    dist = np.sqrt(kl @ kl)
    c, s = kl / dist
    to_line = np.array([[c, s], [-s, c]])
    beta_deg = np.degrees(beta)

    def near(alpha, ref):
        gap = abs(alpha - ref)
        return min(gap, 360 - gap) < beta_deg

    def slots(disp, toward_sign):
        d = to_line @ disp
        if np.sqrt(d @ d) <= theta * dist:
            return "0", "0"
        alpha = np.degrees(np.arctan2(d[1], d[0])) % 360
        radial = "0" if near(alpha, 90) or near(alpha, 270) else ("-" if toward_sign * d[0] > 0 else "+")
        lateral = "0" if near(alpha, 0) or near(alpha, 180) else ("-" if d[1] > 0 else "+")
        return radial, lateral

    a, c_ = slots(k1 - k0, +1)
    b, d_ = slots(l1 - l0, -1)
    return (a, b, c_, d_)


def random_qtc_inputs(rng):
    k0, l0 = rng.normal(size=2), rng.normal(size=2)
    scale = np.linalg.norm(l0 - k0)
    k1 = k0 + rng.normal(size=2) * scale * rng.choice([0.01, 0.1, 0.5])
    l1 = l0 + rng.normal(size=2) * scale * rng.choice([0.01, 0.1, 0.5])
    return k0, k1, l0, l1
