"""End-to-end acceptance checks, one test per criterion.

Each test records a ``criterion N: PASS|FAIL ...`` line that is printed in
the terminal summary, then asserts.
"""

import itertools
import math
from pathlib import Path

import mpmath
import numpy as np
from scipy import stats

import metricbounds.cli as cli
from metricbounds import (BoundInputs, FitOptions, LabeledDataset, LossSpec, Metric,
                          NetHypothesis, SplitSpec, augment_noise, centroid_gap,
                          coin_failure_bound, coin_mc_failure, empirical_centroid_gap,
                          empirical_distance_error, erm_fit, frobenius_complexity, joint_fit,
                          lemma1_bound, load_csv, lowerbound_experiment, make_pairs, net_forward,
                          objective, objective_gradient, pair_loss, parse_config,
                          project_l1_ball, rademacher_chain_bound, rademacher_estimate,
                          rademacher_exact, rademacher_sup_closed_form, shuffled_pairs,
                          simplex_vertices, split, standardize, triplet_loss,
                          wishart_covariance, zero_one_error)
from metricbounds.experiment import run_experiment, summarize

from conftest import ACCEPTANCE_LINES

IRIS = Path(__file__).parent / "data" / "iris.csv"


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_01_loss_table():
    lb4, lb16 = LossSpec(1.0, 0.0, 1.0), LossSpec(4.0, 0.0, 0.25)
    pair_cases = [
        (LossSpec(1, 1, 2), 0.5, 1, 0.0),
        (lb4, 0.5, 0, 0.5),
        (LossSpec(10, 0, 1), 0.5, 1, 1.0),
        (LossSpec(2, 0.5, 3), 0.75, 1, 0.5),
        (LossSpec(2, 0.5, 3), 2.75, 0, 0.5),
        (lb16, 0.2, 0, 0.2),
        (lb16, 0.1, 1, 0.4),
    ]
    triplet_cases = [
        (LossSpec(5), 3.0, 0.0, (1, 1, 1), 0.0),
        (LossSpec(1), 0.3, 0.8, (1, 1, 0), 0.0),
        (LossSpec(2), 0.9, 0.5, (0, 0, 1), 0.8),
        (LossSpec(1), 5.0, 0.0, (1, 0, 0), 0.0),
        (LossSpec(0.5), 3.0, 1.0, (2, 2, 0), 1.0),
    ]
    errs = [abs(pair_loss(s, r, y) - v) for s, r, y, v in pair_cases]
    errs += [abs(triplet_loss(s, a, b, lab) - v) for s, a, b, lab, v in triplet_cases]
    worst = max(errs)
    ok = len(errs) == 12 and worst <= 1e-12
    assert record(1, ok, f"{len(errs)} cases, max abs error {worst:.1e}")


def _smooth(A, S, spec, h):
    d = S.diffs @ A.T
    rho = np.einsum("ij,ij->i", d, d)
    kinks = np.array([spec.U, spec.U + 1 / spec.lam, spec.L, spec.L - 1 / spec.lam])
    margin = 1e-3 + 10 * h * np.max(np.einsum("ij,ij->i", S.diffs, S.diffs))
    return np.min(np.abs(rho[:, None] - kinks[None, :])) > margin


def test_criterion_02_gradient_check():
    rng = np.random.default_rng(20)
    h = 1e-6
    worst, checked = 0.0, 0
    while checked < 1000:
        D = int(rng.integers(2, 5))
        m = int(rng.integers(1, 10))
        X = rng.standard_normal((2 * m, D))
        S = make_pairs(X, rng.integers(0, 2, 2 * m))
        spec = LossSpec(rng.uniform(0.1, 2), rng.uniform(0, 1), rng.uniform(1.5, 4))
        A = rng.uniform(-1, 1, (D, D))
        A /= 1.01 * np.linalg.norm(A, 2)
        Lam = rng.uniform(0, 2)
        if not _smooth(A, S, spec, h):
            continue
        g = objective_gradient(A, S, spec, Lam)
        fd = np.empty_like(A)
        for i, j in itertools.product(range(D), repeat=2):
            E = np.zeros_like(A)
            E[i, j] = h
            fd[i, j] = (objective(Metric(A + E), S, spec, Lam)
                        - objective(Metric(A - E), S, spec, Lam)) / (2 * h)
        # relative error per entry; entries below 1e-4 in size are compared at that scale
        rel = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-4)
        worst = max(worst, float(rel.max()))
        checked += 1
    assert record(2, worst < 1e-4, f"1000 configurations, max relative error {worst:.2e}")


def test_criterion_03_simplex_suite():
    rng = np.random.default_rng(30)
    worst = 0.0
    floor_ok = True
    for n in range(1, 51):
        V = simplex_vertices(n)
        worst = max(worst, np.abs(np.einsum("ij,ij->i", V, V) - 1).max())
        d2 = ((V[:, None] - V[None]) ** 2).sum(-1)[~np.eye(n + 1, dtype=bool)]
        worst = max(worst, np.abs(d2 - 2 * (n + 1) / n).max())
        for k in range(1, n + 1):
            part = rng.permutation(np.arange(n + 1) < k)
            gap = empirical_centroid_gap(V, part)
            worst = max(worst, abs(gap - centroid_gap(n, k)))
            floor_ok &= gap >= 4 / n - 1e-9
    ok = worst <= 1e-9 and floor_ok
    assert record(3, ok, f"n=1..50, max deviation {worst:.1e}, gap >= 4/n: {floor_ok}")


def test_criterion_04_rademacher_oracles():
    rng = np.random.default_rng(40)
    details, ok = [], True
    for D, m in itertools.product((2, 3), (4, 8)):
        diffs = rng.standard_normal((m, D))
        exact = rademacher_exact(diffs)
        mean, se = rademacher_estimate(diffs, 4000, seed=D * 10 + m)
        mc_ok = abs(mean - exact) <= 3 * se
        A = rng.standard_normal((10_000, D, D))
        A /= np.linalg.norm(A, ord=2, axis=(1, 2))[:, None, None]
        G = np.einsum("nki,nkj->nij", A, A)
        dom_gap, match_gap = -np.inf, 0.0
        for signs in itertools.product((-1.0, 1.0), repeat=m):
            s = np.array(signs)
            closed = rademacher_sup_closed_form(s, diffs)
            Smat = diffs.T @ (s[:, None] * diffs)
            sampled = np.einsum("nij,ij->n", G, Smat) / m
            w, U = np.linalg.eigh(Smat)
            P = U[:, w > 0] if np.any(w > 0) else U[:, -1:]
            at_projector = np.sum(P * (Smat @ P)) / m
            dom_gap = max(dom_gap, sampled.max() - closed)
            match_gap = max(match_gap, abs(max(sampled.max(), at_projector) - closed))
        case_ok = mc_ok and dom_gap <= 1e-3 and match_gap <= 1e-3
        ok &= case_ok
        details.append(f"D={D} m={m}: |mc-exact|/se={abs(mean - exact) / se:.2f}")
    assert record(4, ok, "; ".join(details))


def _ball_points(rng, n, D):
    X = rng.standard_normal((n, D))
    X /= np.linalg.norm(X, axis=1)[:, None]
    return X * rng.uniform(0, 1, (n, 1)) ** (1 / D)


def test_criterion_05_bound_sanity():
    rng = np.random.default_rng(50)
    chain_ok, notes = True, []
    for D, m in itertools.product((4, 16), (32, 128)):
        X = _ball_points(rng, 2 * m, D)
        S = make_pairs(X, np.zeros(2 * m))
        mean, se = rademacher_estimate(S, 2000, seed=D + m)
        chain_ok &= mean <= rademacher_chain_bound(1.0, D, m) + 3 * se
        notes.append(f"{mean:.3f}<={rademacher_chain_bound(1.0, D, m):.3f}")

    D, m, delta = 4, 128, 0.1
    u = np.ones(D) / 2
    spec = LossSpec(0.1, 0.0, 1.0)

    def draw(n):
        X = _ball_points(rng, n, D)
        return X, (X @ u > 0).astype(int)

    Xp, yp = draw(40_000)
    population = make_pairs(Xp, yp)
    bound = lemma1_bound(BoundInputs(B=1.0, lam=spec.lam, D=D, m=m, delta=delta))
    within = 0
    for _ in range(50):
        X, y = draw(2 * m)
        S = make_pairs(X, y)
        M = erm_fit(S, spec, 0.0, FitOptions(max_iters=300))
        gap = abs(empirical_distance_error(M, population, spec) - empirical_distance_error(M, S, spec))
        within += gap <= bound
    ok = chain_ok and within >= 45
    assert record(5, ok, f"chain {' '.join(notes)}; gap <= {bound:.3f} in {within}/50")


def test_criterion_06_coin_failure():
    ok, notes = True, []
    for eps, m in itertools.product((0.1, 0.2), (10, 50)):
        rate = coin_mc_failure(eps, m, 100_000, seed=int(eps * 100) + m)
        sigma = math.sqrt(rate * (1 - rate) / 100_000)
        b = coin_failure_bound(eps, m)
        ok &= rate > b - 3 * sigma
        notes.append(f"({eps},{m}) {rate:.4f}>{b:.4f}")
    mpmath.mp.dps = 50
    e = mpmath.mpf("0.2")
    hp = (1 - mpmath.sqrt(1 - mpmath.exp(-2 * 5 * e**2 / (1 - e**2)))) / 4
    value = coin_failure_bound(0.2, 10)
    ok &= abs(value - 0.104) <= 1e-3 and abs(value - float(hp)) <= 1e-12
    assert record(6, ok, f"{'; '.join(notes)}; bound(0.2,10)={value:.6f}")


def test_criterion_07_lower_bound_scaling():
    rows = lowerbound_experiment(16, 0.25, [50, 5000], trials=200, eps=0.05, seed=0)
    f_small, f_large = rows[0]["failure_fraction"], rows[1]["failure_fraction"]
    ok = f_small - f_large >= 0.2
    assert record(7, ok, f"failure m=50: {f_small:.3f}, m=5000: {f_large:.3f}")


def test_criterion_08_shrinkage_monotone():
    base = load_csv(IRIS, has_header=True)
    grid = [round(0.1 * i, 1) for i in range(11)]
    spec, opts = LossSpec(0.2, 0.0, 5.0), FitOptions(max_iters=500)
    f2 = np.zeros((5, len(grid)))
    for seed in range(5):
        ds = augment_noise(base, wishart_covariance(50, seed), seed)
        train, _, _ = standardize(*split(ds, SplitSpec(seed=seed)))
        S = shuffled_pairs(train.points, train.labels, np.random.default_rng(seed), 1)
        for j, Lam in enumerate(grid):
            f2[seed, j] = frobenius_complexity(erm_fit(S, spec, Lam, opts))[0]
    mean = f2.mean(axis=0)
    rho, p = stats.spearmanr(grid, mean)
    ok = rho < 0 and p < 0.05
    assert record(8, ok, f"Spearman rho={rho:.3f} p={p:.1e}; mean f2 {mean[0]:.2f} -> {mean[-1]:.2f}")


def test_criterion_09_noise_experiment():
    cfg = parse_config(f"dataset = {IRIS}\nhas_header = true\nnoise_dims = 0, 50, 100, 200\n"
                       "runs = 10\nk = 3\nstandardize = true\npair_passes = 10\n")
    s = summarize(run_experiment(cfg))
    a = abs(s[200]["err_unreg"] - s[200]["err_identity"]) <= 0.05
    b = all(s[nd]["err_reg"] <= s[nd]["err_unreg"] for nd in (50, 100, 200))
    c = s[200]["err_unreg"] - s[200]["err_reg"] >= 0.03
    table = ", ".join(f"{nd}: unreg {v['err_unreg']:.3f} reg {v['err_reg']:.3f} "
                      f"id {v['err_identity']:.3f}" for nd, v in s.items())
    assert record(9, a and b and c, table)


def test_criterion_10_network_class():
    rng = np.random.default_rng(100)
    lip_ok = True
    for _ in range(100):
        K, D, gamma = int(rng.integers(1, 8)), int(rng.integers(1, 6)), rng.uniform(0.1, 5)
        w = project_l1_ball(rng.standard_normal(K) * 2)
        V = np.array([project_l1_ball(r) for r in rng.standard_normal((K, D)) * 2])
        h = NetHypothesis(w, V, gamma)
        x, xp = rng.standard_normal((2, 1000, D)) * 2
        lhs = np.abs(net_forward(h, x) - net_forward(h, xp))
        lip_ok &= bool(np.all(lhs <= gamma * np.abs(x - xp).max(axis=1) + 1e-12))
    X = np.vstack([rng.normal([-0.5, 0.0], 0.1, (50, 2)), rng.normal([0.5, 0.0], 0.1, (50, 2))])
    S = LabeledDataset(X, np.repeat([0, 1], 50))
    M, h = joint_fit(S, 4, 4.0, LossSpec(4), 0.0, FitOptions(max_iters=1000))
    err = zero_one_error(h, M, S)
    assert record(10, lip_ok and err <= 0.05, f"Lipschitz holds: {lip_ok}; joint_fit 0/1 error {err:.3f}")


def test_criterion_11_cli_determinism(tmp_path):
    cfg = tmp_path / "smallest.cfg"
    cfg.write_text(f"dataset = {IRIS}\nhas_header = true\nnoise_dims = 0\nruns = 1\n")
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [cli.main(["--config", str(cfg), "--output", str(o), "experiment"]) for o in outs]
    same = outs[0].read_bytes() == outs[1].read_bytes()
    ok = codes == [0, 0] and same
    assert record(11, ok, f"exit codes {codes}, byte-identical: {same}")
