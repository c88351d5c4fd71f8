"""Tree-structured CRF over the five label slots.

The tree is rooted at START with edges START->LOC, LOC->SUBJ, LOC->OBJ,
LOC->PREP and SUBJ->VERB.  A tuple (l, s, o, p, v) scores

    t_l + t_s + t_o + t_p + t_v + start[l] + ls[l, s] + lo[l, o] + lp[l, p] + sv[s, v]

where the ``t_*`` are per-slot emission scores from a network.  Partition
functions, marginals and MAP tuples are computed exactly by passing
messages inward to LOC and back out, at a cost linear in the table sizes.

Emission scores are always given in label-slot order (subject, verb,
object, preposition, locative); each entry may be 1-D (one instance) or
2-D with a leading batch axis.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from ..exceptions import InfeasibleDecodeError, InvalidInputError
from ..labels import ENTITIES, NONE, PREPOSITIONS, SLOTS, VERBS

TABLES = ("start", "ls", "lo", "lp", "sv")
SUBJ, VERB, OBJ, PREP, LOC = range(5)


def _lse(a, axis=-1):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


@dataclass
class TreeCrfWeights:
    """Pairwise score tables on the tree edges plus optional hard masks.

    ``masks`` maps a table name to a boolean array of the same shape;
    False entries are forbidden and score -inf during inference.
    """

    start: np.ndarray
    ls: np.ndarray
    lo: np.ndarray
    lp: np.ndarray
    sv: np.ndarray
    masks: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, sizes=None, masks=None):
        ns, nv, no, np_, nl = sizes or tuple(len(v) for v in (ENTITIES, VERBS, ENTITIES, PREPOSITIONS, ENTITIES))
        return cls(np.zeros(nl), np.zeros((nl, ns)), np.zeros((nl, no)), np.zeros((nl, np_)),
                   np.zeros((ns, nv)), dict(masks or {}))

    @classmethod
    def random(cls, rng, sizes=None, scale=1.0, masks=None):
        w = cls.zeros(sizes, masks)
        for name in TABLES:
            setattr(w, name, rng.normal(0.0, scale, size=getattr(w, name).shape))
        return w

    @property
    def sizes(self):
        """Vocabulary sizes in slot order (subject, verb, object, preposition, locative)."""
        return (self.ls.shape[1], self.sv.shape[1], self.lo.shape[1], self.lp.shape[1], self.start.shape[0])

    def tables(self):
        return {name: getattr(self, name) for name in TABLES}

    def effective(self, name):
        table = getattr(self, name)
        mask = self.masks.get(name)
        return table if mask is None else np.where(mask, table, -np.inf)

    def with_masks(self, masks):
        return replace(self, masks=dict(masks))


def constraint_masks():
    """Table masks for the structural constraints that live on tree edges.

    Subject/locative and object/locative may not name the same entity,
    locative is None exactly when preposition is, and a missing verb forces
    the subject to None.  Constraints between slots that share no edge
    (subject/object, verb/others) need :func:`crf_decode` with
    ``constrained=True``.
    """
    ent = np.array(ENTITIES)
    distinct = (ent[:, None] != ent[None, :]) | (ent[:, None] == NONE)
    prep_ok = (ent[:, None] == NONE) == (np.array(PREPOSITIONS)[None, :] == NONE)
    sv_ok = ~((np.array(VERBS)[None, :] == NONE) & (ent[:, None] != NONE))
    return {"ls": distinct.copy(), "lo": distinct.copy(), "lp": prep_ok, "sv": sv_ok}


def _check(scores, w):
    if len(scores) != 5:
        raise InvalidInputError("need five slot score vectors")
    scores = [np.asarray(s, dtype=np.float64) for s in scores]
    single = scores[0].ndim == 1
    scores = [s[None, :] if single else s for s in scores]
    for s, n in zip(scores, w.sizes):
        if s.shape[-1] != n or s.shape[0] != scores[0].shape[0]:
            raise InvalidInputError("score vector sizes do not match the CRF tables")
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("scores must be finite")
    return scores, single


def _inward(scores, w):
    ts, tv, to, tp, tl = scores
    m_vs = _lse(w.effective("sv")[None] + tv[:, None, :])  # (B, S)
    b_s = ts + m_vs
    m_sl = _lse(w.effective("ls")[None] + b_s[:, None, :])  # (B, L)
    m_ol = _lse(w.effective("lo")[None] + to[:, None, :])
    m_pl = _lse(w.effective("lp")[None] + tp[:, None, :])
    base_l = tl + w.effective("start")[None]
    return dict(m_vs=m_vs, b_s=b_s, m_sl=m_sl, m_ol=m_ol, m_pl=m_pl, base_l=base_l,
                b_l=base_l + m_sl + m_ol + m_pl)


def crf_log_partition(scores, w):
    """log sum over all tuples of exp(score)."""
    scores, single = _check(scores, w)
    log_z = _lse(_inward(scores, w)["b_l"])
    return float(log_z[0]) if single else log_z


def crf_marginals(scores, w):
    """Log-partition, node marginals and edge marginals.

    Returns ``(log_z, nodes, edges)`` where ``nodes`` is a list of (B, n)
    arrays in slot order and ``edges`` maps each table name to its (B, ...)
    pairwise marginal.
    """
    scores, _ = _check(scores, w)
    ts, tv, to, tp, tl = scores
    msg = _inward(scores, w)
    log_z = _lse(msg["b_l"])
    lz = log_z[:, None, None]
    base_l, m_sl, m_ol, m_pl = msg["base_l"], msg["m_sl"], msg["m_ol"], msg["m_pl"]
    ls_, lo_, lp_, sv_ = (w.effective(n) for n in ("ls", "lo", "lp", "sv"))
    with np.errstate(invalid="ignore"):
        out_s = base_l + m_ol + m_pl
        pair_ls = np.exp(out_s[:, :, None] + ls_[None] + msg["b_s"][:, None, :] - lz)
        pair_lo = np.exp((base_l + m_sl + m_pl)[:, :, None] + lo_[None] + to[:, None, :] - lz)
        pair_lp = np.exp((base_l + m_sl + m_ol)[:, :, None] + lp_[None] + tp[:, None, :] - lz)
        down_s = _lse(out_s[:, :, None] + ls_[None], axis=1)  # (B, S)
        pair_sv = np.exp((down_s + ts)[:, :, None] + sv_[None] + tv[:, None, :] - lz)
    edges = {"start": np.exp(msg["b_l"] - log_z[:, None]), "ls": pair_ls, "lo": pair_lo,
             "lp": pair_lp, "sv": pair_sv}
    edges = {k: np.nan_to_num(v) for k, v in edges.items()}
    nodes = [edges["ls"].sum(axis=1), edges["sv"].sum(axis=1), edges["lo"].sum(axis=1),
             edges["lp"].sum(axis=1), edges["start"]]
    return log_z, nodes, edges


def tuple_score(scores, w, labels):
    """Score of given tuples; ``labels`` is (B, 5) integer codes in slot order."""
    scores, _ = _check(scores, w)
    labels = np.atleast_2d(labels)
    b = np.arange(labels.shape[0])
    s, v, o, p, l = labels.T
    total = sum(sc[b, labels[:, k]] for k, sc in enumerate(scores))
    return (total + w.effective("start")[l] + w.effective("ls")[l, s] + w.effective("lo")[l, o]
            + w.effective("lp")[l, p] + w.effective("sv")[s, v])


def crf_loss(scores, w, gold):
    """Negative log-likelihood of the gold tuples, one value per instance."""
    single = np.asarray(scores[0]).ndim == 1
    loss = crf_log_partition(scores, w) - tuple_score(scores, w, gold)
    return float(np.squeeze(loss)) if single else loss


def crf_loss_grad(scores, w, gold):
    """Mean NLL over the batch with gradients.

    Returns ``(loss, dscores, dtables)``: gradients of the mean loss with
    respect to each slot's score array and to each CRF table.  Each is
    marginal minus indicator, averaged over the batch.
    """
    scores, _ = _check(scores, w)
    gold = np.atleast_2d(gold)
    n = gold.shape[0]
    log_z, nodes, edges = crf_marginals(scores, w)
    loss = log_z - tuple_score(scores, w, gold)
    b = np.arange(n)
    dscores = []
    for k, mu in enumerate(nodes):
        g = mu.copy()
        g[b, gold[:, k]] -= 1.0
        dscores.append(g / n)
    s, v, o, p, l = gold.T
    dtables = {}
    for name, (rows, cols) in {"ls": (l, s), "lo": (l, o), "lp": (l, p), "sv": (s, v)}.items():
        g = edges[name].sum(axis=0)
        np.add.at(g, (rows, cols), -1.0)
        dtables[name] = g / n
    g = edges["start"].sum(axis=0)
    np.add.at(g, l, -1.0)
    dtables["start"] = g / n
    return float(loss.mean()), dscores, dtables


def _feasibility():
    ent = np.array(ENTITIES)
    verbs = np.array(VERBS)
    preps = np.array(PREPOSITIONS)
    L = ent[:, None, None, None]
    S = ent[None, :, None, None]
    O = ent[None, None, :, None]
    V = verbs[None, None, None, :]
    distinct = ((L == NONE) | (L != S)) & ((L == NONE) | (L != O)) & ((S == NONE) | (S != O))
    no_verb = (V != NONE) | ((L == NONE) & (S == NONE) & (O == NONE))
    lsov = distinct & no_verb  # (L, S, O, V)
    lp = ((ent[:, None, None] == NONE) == (preps[None, :, None] == NONE)) \
        & ((verbs[None, None, :] != NONE) | (preps[None, :, None] == NONE))  # (L, P, V)
    return lsov, lp


def crf_decode(scores, w, constrained=False):
    """Highest-scoring tuple by max-product message passing.

    Returns ``(labels, best)``: integer codes of shape (B, 5) in slot order
    (or (5,) for a single instance) and the joint score.  Ties resolve to
    the lowest vocabulary index at each argmax.  With ``constrained=True``
    the full structural predicate of :func:`qsrevents.labels.satisfies_constraints`
    is enforced as well; this expands LOC, SUBJ, OBJ and VERB into one
    clique, still far cheaper than enumeration.
    """
    scores, single = _check(scores, w)
    if constrained:
        labels, best = _decode_constrained(scores, w)
    else:
        labels, best = _decode_tree(scores, w)
    if np.any(~np.isfinite(best)):
        raise InfeasibleDecodeError("every label tuple is masked out")
    return (labels[0], float(best[0])) if single else (labels, best)


def _decode_tree(scores, w):
    ts, tv, to, tp, tl = scores
    b = np.arange(ts.shape[0])
    a_sv = w.effective("sv")[None] + tv[:, None, :]
    arg_v = np.argmax(a_sv, axis=-1)
    b_s = ts + np.max(a_sv, axis=-1)
    a_ls = w.effective("ls")[None] + b_s[:, None, :]
    arg_s = np.argmax(a_ls, axis=-1)
    a_lo = w.effective("lo")[None] + to[:, None, :]
    arg_o = np.argmax(a_lo, axis=-1)
    a_lp = w.effective("lp")[None] + tp[:, None, :]
    arg_p = np.argmax(a_lp, axis=-1)
    b_l = tl + w.effective("start")[None] + a_ls.max(-1) + a_lo.max(-1) + a_lp.max(-1)
    l = np.argmax(b_l, axis=-1)
    s = arg_s[b, l]
    labels = np.stack([s, arg_v[b, s], arg_o[b, l], arg_p[b, l], l], axis=1)
    return labels, b_l[b, l]


def _decode_constrained(scores, w):
    ts, tv, to, tp, tl = scores
    n = ts.shape[0]
    lsov_ok, lpv_ok = _feasibility()
    # best preposition for each (l, v)
    a_lpv = (w.effective("lp")[None, :, :, None] + tp[:, None, :, None])
    a_lpv = np.where(lpv_ok[None], a_lpv, -np.inf)  # (B, L, P, V)
    arg_p = np.argmax(a_lpv, axis=2)
    best_p = np.max(a_lpv, axis=2)  # (B, L, V)
    total = ((tl + w.effective("start")[None])[:, :, None, None, None]
             + (w.effective("ls")[None] + ts[:, None, :])[:, :, :, None, None]
             + (w.effective("lo")[None] + to[:, None, :])[:, :, None, :, None]
             + (w.effective("sv")[None] + tv[:, None, :])[:, None, :, None, :]
             + best_p[:, :, None, None, :])
    total = np.where(lsov_ok[None], total, -np.inf)  # (B, L, S, O, V)
    flat = total.reshape(n, -1)
    idx = np.argmax(flat, axis=1)
    l, s, o, v = np.unravel_index(idx, total.shape[1:])
    p = arg_p[np.arange(n), l, v]
    labels = np.stack([s, v, o, p, l], axis=1)
    return labels, flat[np.arange(n), idx]


__all__ = ["SLOTS", "TABLES", "TreeCrfWeights", "constraint_masks", "crf_decode", "crf_log_partition",
           "crf_loss", "crf_loss_grad", "crf_marginals", "tuple_score"]
