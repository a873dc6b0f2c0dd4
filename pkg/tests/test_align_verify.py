import numpy as np
import pytest

from symextia import (
    ParameterError,
    PrecoderSet,
    build_cascades,
    build_effective,
    build_precoders,
    build_s_matrix,
    check_alignment,
    distinctness_audit,
    draw_realization,
    generate_channels,
    make_config,
    min_relative_gap,
    numerical_rank,
    orthonormal_basis,
    receiver_composite,
    signal_space_rank,
    subseed,
)


def _double_setup(seed, model="constant", users=3, n=2):
    layer = "double"
    cfg = make_config(users, n, layer)
    ch = generate_channels(users, cfg.extension_length, model, subseed(seed, 2))
    gains, eff, pre, _ = draw_realization(ch, "double", cfg, subseed(seed, 3))
    return cfg, eff, pre


class TestNumericalRank:
    def test_full_rank_identity(self):
        rank, margin, threshold = numerical_rank(np.eye(4))
        assert rank == 4 and margin == 1.0 and threshold > 0

    def test_detects_numerical_deficiency(self):
        m = np.diag([1.0, 1e-20])
        rank, margin, _ = numerical_rank(m)
        assert rank == 1
        assert margin == pytest.approx(1e-20)

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((3, 2)))[0] == 0

    def test_basis_spans_column_space_only(self):
        m = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])  # rank 1
        q = orthonormal_basis(m)
        assert q.shape == (3, 1)
        proj = q @ q.conj().T
        assert np.allclose(proj @ m, m)


class TestMinRelativeGap:
    def test_close_pair(self):
        assert min_relative_gap(np.array([1.0, 1.0 + 1e-12, 2.0])) == pytest.approx(1e-12, rel=0.1)

    def test_single_value_is_infinite(self):
        assert min_relative_gap(np.array([3.0])) == float("inf")

    def test_identical_values_gap_zero(self):
        assert min_relative_gap(np.array([2.0, 2.0])) == 0.0


class TestDoubleLayerAlignment:
    def test_constant_channel_passes(self):
        worst_residual = 0.0
        worst_margin = float("inf")
        for seed in range(100):
            cfg, eff, pre = _double_setup(seed)
            report = check_alignment(eff, pre)
            assert report.verdict == "pass"
            worst_residual = max(worst_residual, max(report.residuals.values()))
            for result in report.rank_results.values():
                assert result.rank == result.required == cfg.effective_dim
                assert result.margin > result.threshold
                worst_margin = min(worst_margin, result.margin)
        assert worst_residual <= 1e-10
        # empirical floor for the rank certificate, far above the threshold
        assert worst_margin > 1e-9

    def test_slow_changing_passes(self):
        for seed in range(100):
            _, eff, pre = _double_setup(seed, model="slow_changing")
            report = check_alignment(eff, pre)
            assert report.verdict == "pass"
            assert max(report.residuals.values()) <= 1e-10

    def test_four_users_pass(self):
        cfg, eff, pre = _double_setup(0, users=4, n=1)
        report = check_alignment(eff, pre)
        assert report.verdict == "pass"
        assert all(r.rank == 33 for r in report.rank_results.values())
        # containment keys cover all interfering pairs at receivers 2..4
        assert sum(key.startswith("contain") for key in report.residuals) == 6
        assert sum(key.startswith("equality") for key in report.residuals) == 2

    def test_s_matrix_rank_matches_composite(self):
        for seed in range(100):
            cfg, eff, pre = _double_setup(seed)
            s = build_s_matrix(eff, pre)
            composite = receiver_composite(eff, pre, 1)
            assert s.shape == composite.shape == (cfg.effective_dim, cfg.effective_dim)
            assert numerical_rank(s)[0] == numerical_rank(composite)[0] == cfg.effective_dim

    def test_misaligned_precoders_leave_large_residuals(self):
        _, eff, pre = _double_setup(5)
        rng = np.random.default_rng(11)
        random_cols = {
            user: rng.standard_normal((pre.dim, mat.shape[1]))
            + 1j * rng.standard_normal((pre.dim, mat.shape[1]))
            for user, mat in pre.precoders.items()
        }
        fake = PrecoderSet(
            users=pre.users,
            dim=pre.dim,
            precoders={
                u: m / np.linalg.norm(m, axis=0, keepdims=True)
                for u, m in random_cols.items()
            },
            stream_counts=pre.stream_counts,
            pairs=pre.pairs,
            column_order=pre.column_order,
            scalar_multiplies=pre.scalar_multiplies,
        )
        report = check_alignment(eff, fake)
        assert report.verdict == "fail"
        containment = [v for k, v in report.residuals.items() if k.startswith("contain")]
        assert max(containment) > 0.1

    def test_scale_invariance_of_checks(self):
        _, eff, pre = _double_setup(6)
        rng = np.random.default_rng(0)
        scaled = {}
        for user, mat in pre.precoders.items():
            scales = rng.uniform(0.2, 5.0, mat.shape[1]) * np.exp(
                2j * np.pi * rng.uniform(size=mat.shape[1])
            )
            scaled[user] = mat * scales[None, :]
        twin = PrecoderSet(
            users=pre.users,
            dim=pre.dim,
            precoders=scaled,
            stream_counts=pre.stream_counts,
            pairs=pre.pairs,
            column_order=pre.column_order,
            scalar_multiplies=pre.scalar_multiplies,
        )
        base = check_alignment(eff, pre)
        rescaled = check_alignment(eff, twin)
        assert rescaled.verdict == base.verdict == "pass"
        for key, value in base.residuals.items():
            assert abs(rescaled.residuals[key] - value) <= 1e-12
        for k in base.rank_results:
            assert rescaled.rank_results[k].rank == base.rank_results[k].rank

    def test_tolerance_is_honored(self):
        _, eff, pre = _double_setup(1)
        strict = check_alignment(eff, pre, residual_tol=1e-18)
        assert strict.tolerance_used == 1e-18
        assert strict.verdict == "fail"
        with pytest.raises(ParameterError):
            check_alignment(eff, pre, residual_tol=0.0)


class TestNaiveCollapse:
    def test_constant_channel_fails_by_rank(self):
        cfg = make_config(3, 2, "single")
        for seed in range(10):
            ch = generate_channels(3, cfg.extension_length, "constant", subseed(seed, 2))
            _, eff, pre, _ = draw_realization(ch, "naive", cfg, subseed(seed, 3))
            report = check_alignment(eff, pre)
            assert report.verdict == "fail"
            assert numerical_rank(pre.precoders[1])[0] == 1
            # the alignment identities still hold; the collapse is a rank event
            assert max(report.residuals.values()) <= 1e-8
            assert report.rank_results[1].rank < report.rank_results[1].required
            assert report.rank_results[1].rank <= 3

    def test_audit_flags_cascades_but_not_kappa(self):
        cfg = make_config(3, 2, "single")
        for seed in range(100):
            ch = generate_channels(3, cfg.extension_length, "constant", subseed(seed, 2))
            _, eff, _, _ = draw_realization(ch, "naive", cfg, subseed(seed, 3))
            audit = distinctness_audit(build_cascades(eff))
            assert audit.flagged == ("T_3_2",)
            assert audit.kappa_gap > audit.threshold


class TestPlainCoding:
    def test_iid_channels_pass(self):
        cfg = make_config(3, 2, "single")
        for seed in range(10):
            eff = build_effective(
                generate_channels(3, cfg.extension_length, "iid", seed), None, "plain"
            )
            pre = build_precoders(eff, cfg)
            report = check_alignment(eff, pre)
            assert report.verdict == "pass"
            assert numerical_rank(pre.precoders[1])[0] == pre.stream_counts[1]

    def test_three_dim_extension_stays_well_conditioned(self):
        # K=3, n=1 fits in three slots; the direct precoder keeps a healthy
        # smallest singular value and the composite never loses rank
        cfg = make_config(3, 1, "single")
        smallest = float("inf")
        for seed in range(100):
            eff = build_effective(
                generate_channels(3, cfg.extension_length, "iid", seed), None, "plain"
            )
            pre = build_precoders(eff, cfg)
            sigma = np.linalg.svd(pre.precoders[1], compute_uv=False)
            smallest = min(smallest, sigma[-1])
            assert signal_space_rank(eff, pre, 1).rank == 3
        assert smallest > 0.01

    def test_direct_precoder_columns_are_cascade_powers(self):
        cfg = make_config(3, 2, "single")
        eff = build_effective(
            generate_channels(3, cfg.extension_length, "iid", 9), None, "plain"
        )
        pre = build_precoders(eff, cfg)
        lam = build_cascades(eff).matrices[(3, 2)]
        for idx, exponents in enumerate(pre.column_order[1]):
            column = pre.precoders[1][:, idx]
            target = lam ** exponents[0]
            cosine = abs(np.vdot(column, target)) / (
                np.linalg.norm(column) * np.linalg.norm(target)
            )
            assert cosine == pytest.approx(1.0, abs=1e-12)

    def test_iid_cascade_entries_distinct(self):
        cfg = make_config(3, 2, "single")
        for seed in range(100):
            eff = build_effective(
                generate_channels(3, cfg.extension_length, "iid", seed), None, "plain"
            )
            audit = distinctness_audit(build_cascades(eff))
            assert audit.flagged == ()

    def test_double_audit_clean_on_constant(self):
        for seed in range(100):
            _, eff, _ = _double_setup(seed)
            audit = distinctness_audit(build_cascades(eff))
            assert audit.flagged == ()
            assert min(audit.lambda_gaps.values()) > audit.threshold


class TestValidation:
    def test_mismatched_pair_rejected(self):
        _, eff, pre = _double_setup(0)
        other_cfg = make_config(3, 1, "single")
        other = build_effective(
            generate_channels(3, other_cfg.extension_length, "iid", 0), None, "plain"
        )
        with pytest.raises(ParameterError):
            check_alignment(other, pre)

    def test_receiver_label_bounds(self):
        _, eff, pre = _double_setup(0)
        with pytest.raises(ParameterError):
            signal_space_rank(eff, pre, 0)
        with pytest.raises(ParameterError):
            receiver_composite(eff, pre, 5)
