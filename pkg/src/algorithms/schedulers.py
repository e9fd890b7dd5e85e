# algorithms/schedulers.py
"""Greedy user schedulers for the MISO broadcast channel.

Rates are in nats. Ties between candidates go to the lowest user index
(np.argmax semantics).
"""

import logging

import numpy as np

from algorithms.channel import channel_gains, null_space_basis, project_complement
from data.system import BeamformerMatrix, ScheduleOutcome

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12


def sum_rate(sinrs):
    sinrs = np.asarray(sinrs, dtype=float)
    if sinrs.size == 0:
        return 0.0
    if np.any(sinrs < 0):
        raise ValueError("SINRs must be nonnegative")
    return float(np.sum(np.log1p(sinrs)))


def _projection_sinr(gain, p2, noise):
    return gain * p2 / (gain * (1.0 - p2) + noise)


def _check_count(r, K, M):
    if not 1 <= r <= min(K, M):
        raise ValueError(f"r must lie in [1, min(K, M)={min(K, M)}], got {r}")


def adaptive_obf(channels, P, force_r=None):
    """Adaptive orthogonal beamforming with greedy user selection.

    Without force_r the algorithm grows the user set while C(U_n) increases,
    evaluating step n with noise term n/P. With force_r it runs exactly r steps
    and every SINR uses r/P.
    """
    H = channels.H
    K, M = H.shape
    if force_r is not None:
        _check_count(force_r, K, M)
    limit = force_r if force_r is not None else M

    def noise(n):
        return (force_r if force_r is not None else n) / P

    gains = channel_gains(H)
    directions = H / np.sqrt(gains)[:, None]

    first = int(np.argmax(gains))
    users = [first]
    p2 = [1.0]
    columns = [directions[first]]
    candidacy = [_projection_sinr(gains[first], 1.0, noise(1))]
    sinrs = list(candidacy)
    rate = sum_rate(sinrs)

    n = 1
    while n < limit and len(users) < K:
        n += 1
        W = np.column_stack(columns)
        remaining = np.array([u for u in range(K) if u not in users])
        residuals = directions[remaining] - (directions[remaining] @ W.conj()) @ W.T
        candidate_p2 = np.sum(np.abs(residuals) ** 2, axis=1)
        candidate_sinr = _projection_sinr(gains[remaining], candidate_p2, noise(n))
        best = int(np.argmax(candidate_sinr))
        winner = int(remaining[best])

        grown_p2 = p2 + [float(candidate_p2[best])]
        grown_users = users + [winner]
        grown_sinrs = [_projection_sinr(gains[u], q, noise(n)) for u, q in zip(grown_users, grown_p2)]
        grown_rate = sum_rate(grown_sinrs)
        if force_r is None and grown_rate <= rate:
            logger.debug("adaptive OBF stops at %d users (C=%.6g)", len(users), rate)
            break
        users, p2, sinrs, rate = grown_users, grown_p2, grown_sinrs, grown_rate
        candidacy.append(float(candidate_sinr[best]))
        residual = residuals[best]
        columns.append(residual / np.linalg.norm(residual))

    return ScheduleOutcome(users, BeamformerMatrix(np.column_stack(columns)), sinrs, rate, candidacy)


def olbf(channels, P):
    """Orthogonal linear beamforming: beams fixed by the strongest user."""
    H = channels.H
    K, M = H.shape
    if K < M:
        raise ValueError(f"OLBF needs K >= M, got K={K}, M={M}")
    noise = M / P
    gains = channel_gains(H)
    directions = H / np.sqrt(gains)[:, None]

    first = int(np.argmax(gains))
    anchor = directions[first]
    W2 = null_space_basis(anchor)
    users = [first]
    sinrs = [_projection_sinr(gains[first], 1.0, noise)]
    for n in range(2, M + 1):
        beam = W2[:, n - 2]
        remaining = np.array([u for u in range(K) if u not in users])
        q2 = np.abs(directions[remaining] @ beam.conj()) ** 2
        candidate_sinr = _projection_sinr(gains[remaining], q2, noise)
        best = int(np.argmax(candidate_sinr))
        users.append(int(remaining[best]))
        sinrs.append(float(candidate_sinr[best]))

    W = BeamformerMatrix(np.column_stack([anchor, W2]))
    return ScheduleOutcome(users, W, sinrs, sum_rate(sinrs), sinrs)


def random_selection_obf(channels, P, r, rng):
    """Candidacy SINRs (v_1, ..., v_r) of one randomly drawn user.

    Beam j is built, as in adaptive OBF, from the j-th of r-1 further randomly
    drawn users; the tagged user's SINR at step n sees the first n-1 beams.
    """
    H = channels.H
    K, M = H.shape
    _check_count(r, K, M)
    order = rng.permutation(K)[:r]
    tagged, builders = int(order[0]), order[1:]
    noise = r / P

    gains = channel_gains(H)
    h = H[tagged]
    columns = np.zeros((M, 0), dtype=complex)
    values = []
    for n in range(1, r + 1):
        residual = project_complement(columns, h / np.sqrt(gains[tagged]))
        p2 = float(np.vdot(residual, residual).real)
        values.append(_projection_sinr(gains[tagged], p2, noise))
        if n < r:
            builder = H[builders[n - 1]]
            step = project_complement(columns, builder / np.linalg.norm(builder))
            columns = np.column_stack([columns, step / np.linalg.norm(step)])
    return tagged, values


def random_selection_olbf(channels, P, rng):
    """Candidacy SINRs (v_1, ..., v_M) of one randomly drawn user under OLBF beams.

    The tagged user is drawn first, then an anchor user whose direction fixes
    the beam set.
    """
    H = channels.H
    K, M = H.shape
    if K < 2:
        raise ValueError("random OLBF selection needs at least two users")
    tagged, anchor_user = (int(u) for u in rng.permutation(K)[:2])
    noise = M / P
    gains = channel_gains(H)
    anchor = H[anchor_user] / np.sqrt(gains[anchor_user])
    W2 = null_space_basis(anchor)
    direction = H[tagged] / np.sqrt(gains[tagged])
    q2 = np.abs(W2.conj().T @ direction) ** 2
    values = [_projection_sinr(gains[tagged], 1.0, noise)]
    values.extend(float(v) for v in _projection_sinr(gains[tagged], q2, noise))
    return tagged, values


def zf_sinrs_pinv(H_S, P, r):
    """ZF SINRs from the pseudo-inverse column norms, with their unit beams."""
    precoder = np.linalg.pinv(H_S)
    norms2 = np.sum(np.abs(precoder) ** 2, axis=0)
    return (P / r) / norms2, precoder / np.sqrt(norms2)


def zf_sinrs_projection(H_S, P, r):
    """ZF SINRs from each row's distance to the span of the other rows."""
    n = H_S.shape[0]
    values = []
    for i in range(n):
        others = np.delete(H_S, i, axis=0)
        h = H_S[i]
        if others.shape[0]:
            coefficients = np.linalg.lstsq(others.T, h, rcond=None)[0]
            h = h - others.T @ coefficients
        values.append((P / r) * float(np.vdot(h, h).real))
    return np.array(values)


def _full_rank(H_S):
    singular = np.linalg.svd(H_S, compute_uv=False)
    return singular[-1] > RANK_TOL * max(1.0, singular[0])


def zfs_schedule(channels, P, r):
    """Zero-forcing beamforming with greedy selection, uniform power P/r."""
    H = channels.H
    K, M = H.shape
    _check_count(r, K, M)
    users = []
    for _ in range(r):
        best_rate, best_user = -np.inf, None
        for u in range(K):
            if u in users:
                continue
            H_S = H[users + [u]]
            if not _full_rank(H_S):
                logger.debug("ZFS skips rank-deficient candidate %d", u)
                continue
            rate = sum_rate(zf_sinrs_pinv(H_S, P, r)[0])
            if rate > best_rate:
                best_rate, best_user = rate, u
        if best_user is None:
            break
        users.append(best_user)
    sinrs, beams = zf_sinrs_pinv(H[users], P, r)
    return ScheduleOutcome(users, BeamformerMatrix(beams, orthogonal=False), sinrs, sum_rate(sinrs), sinrs)


def greedy_zfdp_schedule(channels, P, r):
    """Greedy zero-forcing dirty-paper coding with uniform power P/r.

    Each user's effective gain is the squared norm of its channel orthogonal
    to the channels already encoded before it.
    """
    H = channels.H
    K, M = H.shape
    _check_count(r, K, M)
    users = []
    basis = np.zeros((M, 0), dtype=complex)
    gains = []
    for _ in range(r):
        residuals = H.conj() - (H.conj() @ basis.conj()) @ basis.T
        residual_gain = np.sum(np.abs(residuals) ** 2, axis=1)
        residual_gain[users] = -np.inf
        winner = int(np.argmax(residual_gain))
        if residual_gain[winner] <= RANK_TOL:
            break
        users.append(winner)
        gains.append(float(residual_gain[winner]))
        basis = np.column_stack([basis, residuals[winner] / np.sqrt(residual_gain[winner])])
    sinrs = (P / r) * np.array(gains)
    return ScheduleOutcome(users, BeamformerMatrix(basis), sinrs, sum_rate(sinrs), sinrs)
