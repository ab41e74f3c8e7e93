import numpy as np
import pytest

from tenring.penalties import PenaltySpec, eval_penalty_array, prox
from tenring.tensor import frobenius, gradient
from tenring.transforms import (TransformSpec, apply_transform, gntctv_norm,
                                gntsvt, identity_tensor, inverse_transform,
                                phi_spectral_norm, spectral_singular_values,
                                t_product, tsvd)

KINDS = ("fft", "dct", "identity")


def rand(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


class TestTransform:
    def test_rho_constants(self):
        assert TransformSpec("fft", 6).rho == 6.0
        assert TransformSpec("dct", 6).rho == 1.0
        assert TransformSpec("identity", 6).rho == 1.0

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            TransformSpec("dft", 4)

    def test_identity_exact(self):
        t = rand((3, 4, 5))
        spec = TransformSpec("identity", 5)
        assert (apply_transform(t, spec) == t).all()
        assert (inverse_transform(apply_transform(t, spec), spec) == t).all()

    @pytest.mark.parametrize("kind", KINDS)
    def test_roundtrip(self, kind):
        t = rand((3, 4, 6), 1)
        spec = TransformSpec(kind, 6)
        back = inverse_transform(apply_transform(t, spec), spec)
        assert np.linalg.norm(back - t) <= 1e-10 * np.linalg.norm(t)

    def test_fft_dc_only_for_constant_tubes(self):
        base = rand((3, 4, 1), 2)
        t = np.repeat(base, 5, axis=2)
        th = apply_transform(t, TransformSpec("fft", 5))
        assert np.abs(th[:, :, 1:]).max() < 1e-12
        assert np.allclose(th[:, :, 0].real, 5 * base[:, :, 0])

    def test_dct_against_explicit_matrix(self):
        # orthonormal DCT-II matrix applied along mode 3
        n3 = 4
        t = rand((2, 2, n3), 3)
        spec = TransformSpec("dct", n3)
        c = np.zeros((n3, n3))
        for k in range(n3):
            for n in range(n3):
                c[k, n] = np.cos(np.pi / n3 * (n + 0.5) * k)
        c[0] *= np.sqrt(1.0 / n3)
        c[1:] *= np.sqrt(2.0 / n3)
        ref = np.einsum("kn,ijn->ijk", c, t)
        assert np.allclose(apply_transform(t, spec), ref, atol=1e-12)
        assert np.isclose((ref ** 2).sum(), (t ** 2).sum())

    @pytest.mark.parametrize("kind", KINDS)
    def test_parseval(self, kind):
        t = rand((4, 3, 6), 4)
        spec = TransformSpec(kind, 6)
        th = apply_transform(t, spec)
        lhs = (t ** 2).sum()
        rhs = (np.abs(th) ** 2).sum() / spec.rho
        assert abs(lhs - rhs) <= 1e-9 * lhs

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            apply_transform(rand((2, 2, 3)), TransformSpec("fft", 4))


class TestTProduct:
    def test_identity_spec_facewise(self):
        a, b = rand((3, 4, 2), 5), rand((4, 2, 2), 6)
        spec = TransformSpec("identity", 2)
        out = t_product(a, b, spec)
        for j in range(2):
            assert np.allclose(out[:, :, j], a[:, :, j] @ b[:, :, j])

    @pytest.mark.parametrize("kind", KINDS)
    def test_t_identity_neutral(self, kind):
        a = rand((3, 4, 5), 7)
        spec = TransformSpec(kind, 5)
        eye = identity_tensor(4, spec)
        assert np.abs(t_product(a, eye, spec) - a).max() < 1e-10

    @pytest.mark.parametrize("kind", KINDS)
    def test_n3_one_is_matmul(self, kind):
        a, b = rand((3, 4, 1), 8), rand((4, 2, 1), 9)
        spec = TransformSpec(kind, 1)
        out = t_product(a, b, spec)
        assert np.allclose(out[:, :, 0], a[:, :, 0] @ b[:, :, 0], atol=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_associative(self, kind):
        a, b, c = rand((3, 4, 4), 10), rand((4, 2, 4), 11), rand((2, 5, 4), 12)
        spec = TransformSpec(kind, 4)
        lhs = t_product(t_product(a, b, spec), c, spec)
        rhs = t_product(a, t_product(b, c, spec), spec)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(1, np.linalg.norm(rhs))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            t_product(rand((3, 4, 2)), rand((3, 2, 2)), TransformSpec("fft", 2))


class TestTSVD:
    def test_zero_tensor(self):
        f = tsvd(np.zeros((3, 4, 5)), TransformSpec("fft", 5))
        assert (f.sigma == 0).all()

    def test_f_diagonal_identity_spec(self):
        # per-face scalar SVDs recover |diagonal| sorted nonincreasing
        a = np.zeros((3, 3, 2))
        a[:, :, 0] = np.diag([1.0, -4.0, 2.0])
        a[:, :, 1] = np.diag([0.5, 3.0, -1.0])
        f = tsvd(a, TransformSpec("identity", 2))
        assert np.allclose(np.sort(f.sigma[:, 0])[::-1], [4.0, 2.0, 1.0])
        assert np.allclose(np.sort(f.sigma[:, 1])[::-1], [3.0, 1.0, 0.5])
        assert (np.diff(f.sigma, axis=0) <= 1e-12).all()

    @pytest.mark.parametrize("kind", ("fft", "dct"))
    def test_reconstruction(self, kind):
        a = rand((4, 3, 5), 13)
        spec = TransformSpec(kind, 5)
        f = tsvd(a, spec)
        rec = f.reconstruct()
        assert np.linalg.norm(rec - a) <= 1e-9 * np.linalg.norm(a)

    @pytest.mark.parametrize("kind", KINDS)
    def test_orthogonality_and_sigma_invariants(self, kind):
        a = rand((4, 3, 6), 14)
        spec = TransformSpec(kind, 6)
        f = tsvd(a, spec)
        m = min(a.shape[0], a.shape[1])
        for j in range(6):
            assert np.allclose(np.conj(f.u_hat[j].T) @ f.u_hat[j], np.eye(m), atol=1e-9)
            assert np.allclose(f.vh_hat[j] @ np.conj(f.vh_hat[j].T), np.eye(m), atol=1e-9)
        assert (f.sigma >= 0).all()
        assert (np.diff(f.sigma, axis=0) <= 1e-12).all()

    def test_spatial_factors_reconstruct_via_t_product(self):
        a = rand((4, 3, 5), 15)
        spec = TransformSpec("fft", 5)
        f = tsvd(a, spec)
        uk = t_product(f.u, f.k_tensor, spec)
        # V^T in the t-algebra: conjugate-transpose faces in the transform domain
        vt = inverse_transform(np.moveaxis(f.vh_hat, 0, 2), spec)
        rec = t_product(uk, vt, spec)
        assert np.linalg.norm(rec - a) <= 1e-9 * np.linalg.norm(a)

    def test_nonfinite_rejected(self):
        a = np.zeros((2, 2, 2))
        a[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            tsvd(a, TransformSpec("fft", 2))


class TestGNTSVT:
    def test_l1_matches_facewise_svt(self):
        a = rand((4, 3, 5), 16)
        spec = TransformSpec("fft", 5)
        out = gntsvt(a, spec, PenaltySpec("L1"), 0.7)
        ah = np.fft.fft(a, axis=2)
        ref = np.empty_like(ah)
        for j in range(5):
            u, s, vh = np.linalg.svd(ah[:, :, j], full_matrices=False)
            ref[:, :, j] = (u * np.maximum(s - 0.7, 0.0)) @ vh
        ref = np.fft.ifft(ref, axis=2).real
        assert np.abs(out - ref).max() < 1e-9

    def test_tau_to_zero_limit(self):
        a = rand((3, 3, 4), 17)
        for kind in KINDS:
            out = gntsvt(a, TransformSpec(kind, 4), PenaltySpec("CappedLog"), 1e-12)
            assert np.abs(out - a).max() < 1e-8

    def test_zero_input(self):
        out = gntsvt(np.zeros((3, 3, 4)), TransformSpec("fft", 4),
                     PenaltySpec("MCP", eta=2.0), 0.5)
        assert (out == 0).all()

    @pytest.mark.parametrize("kind", KINDS)
    def test_objective_beats_input_and_zero(self, kind):
        a = rand((3, 4, 5), 18)
        spec = TransformSpec(kind, 5)
        for pk in ("L1", "MCP", "CappedLog"):
            phi = PenaltySpec(pk, eta=2.0)
            tau = 0.4
            out = gntsvt(a, spec, phi, tau)

            def obj(x):
                return tau * phi_spectral_norm(x, spec, phi) + 0.5 * frobenius(x - a) ** 2

            assert obj(out) <= obj(a) + 1e-10
            assert obj(out) <= obj(np.zeros_like(a)) + 1e-10

    def test_perturbation_optimality_small(self):
        # spot check; the acceptance suite runs the full sweep
        rng = np.random.default_rng(19)
        a = rng.standard_normal((2, 2, 2))
        spec = TransformSpec("fft", 2)
        for pk in ("Lp", "CappedMCP"):
            phi = PenaltySpec(pk, p=0.5, eta=2.0, cap=1.0)
            tau = 0.3
            out = gntsvt(a, spec, phi, tau)

            def obj(x):
                return tau * phi_spectral_norm(x, spec, phi) + 0.5 * frobenius(x - a) ** 2

            base = obj(out)
            for _ in range(200):
                step = 10 ** rng.uniform(-3, -1)
                pert = out + step * rng.standard_normal(out.shape)
                assert base <= obj(pert) + 1e-10

    def test_half_spectrum_matches_full(self):
        # conjugate mirroring must agree with shrinking every face separately
        a = rand((4, 3, 6), 20)
        spec = TransformSpec("fft", 6)
        phi = PenaltySpec("CappedLog")
        out = gntsvt(a, spec, phi, 0.5)
        ah = np.fft.fft(a, axis=2)
        ref = np.empty_like(ah)
        for j in range(6):
            u, s, vh = np.linalg.svd(ah[:, :, j], full_matrices=False)
            s[s < 1e-14] = 0.0
            shrunk = np.array([prox(phi, 0.5, sv) for sv in s])
            ref[:, :, j] = (u * shrunk) @ vh
        ref = np.fft.ifft(ref, axis=2).real
        assert np.abs(out - ref).max() < 1e-10

    def test_bad_tau(self):
        with pytest.raises(ValueError):
            gntsvt(np.zeros((2, 2, 2)), TransformSpec("fft", 2), PenaltySpec("L1"), 0.0)


class TestGNTCTVNorm:
    def test_constant_tensor_zero(self):
        t = np.full((3, 4, 5), 3.3)
        spec = TransformSpec("fft", 5)
        for gamma in ((1,), (2, 3), (1, 2, 3)):
            assert gntctv_norm(t, gamma, spec, PenaltySpec("CappedLog")) == 0.0

    def test_mode3_only_direction(self):
        # varies only along mode 3: value is the scaled nuclear mass of grad_3
        rng = np.random.default_rng(21)
        profile = rng.standard_normal(6)
        t = np.broadcast_to(profile, (3, 4, 6)).copy()
        spec = TransformSpec("fft", 6)
        got = gntctv_norm(t, {3}, spec, PenaltySpec("L1"))
        sig = spectral_singular_values(gradient(t, 3), spec)
        assert got == pytest.approx(sig.sum() / spec.rho, rel=1e-12)

    def test_l1_homogeneous(self):
        t = rand((3, 4, 5), 22)
        spec = TransformSpec("dct", 5)
        v1 = gntctv_norm(t, (1, 2, 3), spec, PenaltySpec("L1"))
        v2 = gntctv_norm(2.0 * t, (1, 2, 3), spec, PenaltySpec("L1"))
        assert v2 == pytest.approx(2.0 * v1, rel=1e-10)

    def test_tctv_degeneration_direct_sum_oracle(self):
        # L1 over all three directions equals the plain averaged spectral sums
        t = rand((4, 4, 5), 23)
        spec = TransformSpec("fft", 5)
        got = gntctv_norm(t, (1, 2, 3), spec, PenaltySpec("L1"))
        ref = 0.0
        for k in (1, 2, 3):
            gh = np.fft.fft(gradient(t, k), axis=2)
            ref += sum(np.linalg.svd(gh[:, :, j], compute_uv=False).sum()
                       for j in range(5)) / spec.rho
        ref /= 3.0
        assert got == pytest.approx(ref, rel=1e-10)

    def test_empty_gamma(self):
        with pytest.raises(ValueError):
            gntctv_norm(rand((2, 2, 2)), (), TransformSpec("fft", 2), PenaltySpec("L1"))

    def test_nonnegative_and_zero_iff_flat(self):
        rng = np.random.default_rng(24)
        spec = TransformSpec("dct", 4)
        phi = PenaltySpec("MCP", eta=2.0)
        t = rng.standard_normal((3, 3, 4))
        assert gntctv_norm(t, (1, 2, 3), spec, phi) > 0.0
