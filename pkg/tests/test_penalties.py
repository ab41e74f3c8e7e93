import numpy as np
import pytest

from tenring.penalties import (PenaltySpec, brute_force_prox, eval_penalty,
                               eval_penalty_array, prox, prox_array,
                               prox_objective, threshold_tensor)

ALL_SPECS = [
    PenaltySpec("L1"),
    PenaltySpec("Lp", p=0.5),
    PenaltySpec("Lp", p=0.8),
    PenaltySpec("Log", theta=0.1),
    PenaltySpec("MCP", eta=2.0),
    PenaltySpec("CappedL1", cap=1.0),
    PenaltySpec("CappedLp", p=0.5, cap=1.0),
    PenaltySpec("CappedLog", theta=0.1, cap=1.0),
    PenaltySpec("CappedMCP", eta=2.0, cap=1.0),
]


class TestEval:
    def test_l1_abs(self):
        assert eval_penalty(PenaltySpec("L1"), -3.0) == 3.0

    def test_mcp_inner_branch(self):
        # x - x^2/(2 eta) at eta=2, x=1
        assert eval_penalty(PenaltySpec("MCP", eta=2.0), 1.0) == pytest.approx(0.75)

    def test_mcp_flat_branch(self):
        # eta/2 beyond the knee
        assert eval_penalty(PenaltySpec("MCP", eta=2.0), 5.0) == pytest.approx(1.0)

    def test_log_value(self):
        spec = PenaltySpec("Log", theta=0.5)
        assert eval_penalty(spec, 1.0) == pytest.approx(np.log(3.0))

    def test_capped_saturate_at_one(self):
        for spec in ALL_SPECS:
            if spec.kind.startswith("Capped"):
                assert eval_penalty(spec, 100.0) == pytest.approx(1.0)
                assert eval_penalty(spec, spec.cap) == pytest.approx(1.0)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind + str(s.p))
    def test_zero_even_nondecreasing(self, spec):
        assert eval_penalty(spec, 0.0) == 0.0
        xs = np.linspace(0, 10, 1000)
        vals = eval_penalty_array(spec, xs)
        assert (np.diff(vals) >= -1e-12).all()
        assert np.allclose(eval_penalty_array(spec, -xs), vals)


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PenaltySpec("SCAD")

    @pytest.mark.parametrize("kwargs", [
        {"kind": "Lp", "p": 1.0},
        {"kind": "Lp", "p": 0.0},
        {"kind": "Log", "theta": 0.0},
        {"kind": "MCP", "eta": -1.0},
        {"kind": "CappedL1", "cap": 0.0},
        {"kind": "CappedMCP", "eta": 2.0, "cap": 2.5},
    ])
    def test_bad_params(self, kwargs):
        with pytest.raises(ValueError):
            PenaltySpec(**kwargs)


class TestProx:
    def test_l1_soft_threshold(self):
        l1 = PenaltySpec("L1")
        assert prox(l1, 1.0, 0.5) == 0.0
        assert prox(l1, 1.0, 3.0) == pytest.approx(2.0)
        assert prox(l1, 1.0, -3.0) == pytest.approx(-2.0)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind + str(s.p))
    def test_zero_input(self, spec):
        assert prox(spec, 0.7, 0.0) == 0.0

    def test_cappedlog_vs_oracle_pinned(self):
        spec = PenaltySpec("CappedLog", theta=0.1, cap=1.0)
        x = prox(spec, 0.3, 0.8)
        xo = brute_force_prox(spec, 0.3, 0.8, grid_width=1e-7)
        assert prox_objective(spec, 0.3, x, 0.8) <= prox_objective(spec, 0.3, xo, 0.8) + 1e-10
        assert x == pytest.approx(xo, abs=1e-6)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind + str(s.p))
    def test_optimality_vs_oracle(self, spec):
        rng = np.random.default_rng(123)
        for _ in range(100):
            mu = rng.uniform(1e-3, 10.0)
            v = rng.uniform(-10.0, 10.0)
            x = prox(spec, mu, v)
            xo = brute_force_prox(spec, mu, v)
            assert prox_objective(spec, mu, x, v) <= prox_objective(spec, mu, xo, v) + 1e-8

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind + str(s.p))
    def test_shrinkage_sign_odd(self, spec):
        rng = np.random.default_rng(321)
        for _ in range(200):
            mu = rng.uniform(1e-3, 5.0)
            v = rng.uniform(-8.0, 8.0)
            x = prox(spec, mu, v)
            assert abs(x) <= abs(v) + 1e-12
            assert x * v >= 0.0
            assert prox(spec, mu, -v) == -x

    def test_mu_zero_is_identity(self):
        for spec in ALL_SPECS:
            assert prox(spec, 0.0, 1.7) == 1.7

    def test_capped_consistency_large_cap(self):
        # cap -> inf: capped prox approaches the rescaled uncapped prox
        big = 1e6
        pairs = [
            (PenaltySpec("CappedL1", cap=big), PenaltySpec("L1"), 1.0 / big),
            (PenaltySpec("CappedLp", p=0.5, cap=big), PenaltySpec("Lp", p=0.5), big ** -0.5),
            (PenaltySpec("CappedLog", theta=0.1, cap=big), PenaltySpec("Log", theta=0.1),
             1.0 / np.log1p(big / 0.1)),
        ]
        rng = np.random.default_rng(11)
        for capped, base, scale in pairs:
            for _ in range(100):
                mu = rng.uniform(1e-3, 10.0)
                v = rng.uniform(-10.0, 10.0)
                assert prox(capped, mu, v) == pytest.approx(prox(base, mu * scale, v), abs=1e-6)


class TestBruteForceOracle:
    def test_matches_l1_closed_form(self):
        l1 = PenaltySpec("L1")
        rng = np.random.default_rng(5)
        for _ in range(1000):
            mu = rng.uniform(1e-3, 5.0)
            v = rng.uniform(-10.0, 10.0)
            ref = np.sign(v) * max(abs(v) - mu, 0.0)
            assert brute_force_prox(l1, mu, v) == pytest.approx(ref, abs=1e-9)

    def test_matches_lp_characterization(self):
        # root-finding characterization: x + mu p x^(p-1) = |v| above threshold
        spec = PenaltySpec("Lp", p=0.5)
        rng = np.random.default_rng(6)
        for _ in range(200):
            mu = rng.uniform(1e-3, 3.0)
            v = rng.uniform(-8.0, 8.0)
            xo = brute_force_prox(spec, mu, v)
            x = abs(xo)
            if x > 1e-9:
                resid = x + mu * spec.p * x ** (spec.p - 1.0) - abs(v)
                assert abs(resid) < 1e-7
            assert prox(spec, mu, v) == pytest.approx(xo, abs=1e-7)

    def test_monotone_in_v(self):
        rng = np.random.default_rng(7)
        for spec in ALL_SPECS:
            vs = np.sort(rng.uniform(0.0, 8.0, size=25))
            mu = 0.8
            outs = [brute_force_prox(spec, mu, v) for v in vs]
            assert all(a <= b + 1e-7 for a, b in zip(outs, outs[1:]))

    def test_bad_grid_width(self):
        with pytest.raises(ValueError):
            brute_force_prox(PenaltySpec("L1"), 1.0, 1.0, grid_width=0.0)


class TestThresholdTensor:
    def test_zero_tensor(self):
        z = np.zeros((3, 3, 3))
        for mode in ("entrywise", "tubewise"):
            assert (threshold_tensor(z, PenaltySpec("MCP", eta=2.0), 0.5, mode) == 0).all()

    def test_entrywise_l1_oracle(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((3, 3, 3))
        out = threshold_tensor(a, PenaltySpec("L1"), 0.4, "entrywise")
        ref = np.sign(a) * np.maximum(np.abs(a) - 0.4, 0.0)
        assert np.abs(out - ref).max() < 1e-12

    def test_entrywise_matches_scalar_prox(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((2, 3, 4))
        for spec in ALL_SPECS:
            out = threshold_tensor(a, spec, 0.3, "entrywise")
            ref = np.array([[[prox(spec, 0.3, v) for v in tube] for tube in sl] for sl in a])
            assert np.abs(out - ref).max() < 1e-12

    def test_tubewise_preserves_direction(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((4, 5, 6))
        out = threshold_tensor(a, PenaltySpec("CappedLog"), 0.5, "tubewise")
        for i in range(4):
            for j in range(5):
                tube, otube = a[i, j], out[i, j]
                nrm = np.linalg.norm(tube)
                scale = (otube @ tube) / nrm**2
                assert scale >= -1e-15
                assert np.allclose(otube, scale * tube, atol=1e-12)

    def test_tubewise_zero_tube_maps_to_zero(self):
        a = np.zeros((2, 2, 3))
        a[0, 0] = [3.0, 4.0, 0.0]
        out = threshold_tensor(a, PenaltySpec("L1"), 1.0, "tubewise")
        assert (out[0, 1] == 0).all() and (out[1, 0] == 0).all()
        assert np.allclose(out[0, 0], a[0, 0] * (5.0 - 1.0) / 5.0)

    def test_tubewise_objective_vs_scalings(self):
        # per-tube objective at output <= objective at 100 random scalings
        rng = np.random.default_rng(12)
        a = rng.standard_normal((3, 3, 5))
        lam = 0.7
        for spec in (PenaltySpec("L1"), PenaltySpec("MCP", eta=2.0),
                     PenaltySpec("CappedLog")):
            out = threshold_tensor(a, spec, lam, "tubewise")
            for i in range(3):
                for j in range(3):
                    tube, otube = a[i, j], out[i, j]

                    def obj(x):
                        return (lam * eval_penalty(spec, float(np.linalg.norm(x)))
                                + 0.5 * float(((x - tube) ** 2).sum()))

                    base = obj(otube)
                    for c in rng.uniform(-0.5, 1.5, size=100):
                        assert base <= obj(c * tube) + 1e-10

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            threshold_tensor(np.zeros((2, 2, 2)), PenaltySpec("L1"), 0.5, "blockwise")
