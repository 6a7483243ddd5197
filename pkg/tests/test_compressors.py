import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locomp.compressors import (
    CompressedImage,
    PercentileScheme,
    SketchMatrix,
    compress_block_ms,
    compress_block_percentile,
    compress_block_rmm,
    compress_image,
    downgrade_area,
    gen_sketch_matrix,
    make_percentile_scheme,
    matrix_for_spec,
    pca_feasible,
)
from locomp.config import CompressionSpec
from locomp.errors import (
    DimensionMismatchError,
    UpscaleNotSupportedError,
    ValidationError,
)
from oracles import (
    area_resample_exact,
    assert_close_rel,
    block_mean_loops,
    ms_loops,
    percentile_loops,
    rmm_loops,
)


def _spec(method="percentile", m=7, n=2, **kw):
    kw.setdefault("crop_to", 224)
    kw.setdefault("resize_to", 256)
    return CompressionSpec(method=method, block_size=m, target_size=n, **kw)


# --- PCA feasibility ------------------------------------------------------------


@pytest.mark.parametrize(
    "m, n, p, feasible",
    [(7, 4, 1, False), (7, 5, 1, True), (4, 4, 1, True)],
)
def test_pca_feasible_examples(m, n, p, feasible):
    assert pca_feasible(m, n, p) is feasible


def test_pca_single_component_boundary():
    # n^2 >= 3m with n <= 4 only has room at m=5, n=4 (16 >= 15); every
    # other block side above 4 is infeasible for small targets.
    for m in range(5, 33):
        for n in range(1, 5):
            assert pca_feasible(m, n, 1) is ((m, n) == (5, 4))


@given(st.integers(1, 32), st.integers(1, 32), st.integers(1, 32))
def test_pca_feasible_is_exact_integer_comparison(m, n, p):
    assert pca_feasible(m, n, p) == (n * n >= 2 * m * p + m)


# --- percentile sampling --------------------------------------------------------


def test_scheme_spacing():
    assert make_percentile_scheme(2).quantiles == (0.0, 1 / 3, 2 / 3, 1.0)
    assert make_percentile_scheme(1).quantiles == (0.5,)
    assert make_percentile_scheme(3).quantiles == tuple(k / 8 for k in range(9))


def test_scheme_validation():
    with pytest.raises(ValidationError):
        PercentileScheme((0.5, 0.2))
    with pytest.raises(ValidationError):
        PercentileScheme((0.1, 0.5, 1.0))  # must start at 0
    with pytest.raises(ValidationError):
        PercentileScheme(())


def test_percentile_constant_block():
    block = np.full((7, 7), 5, dtype=np.uint8)
    out = compress_block_percentile(block, make_percentile_scheme(2))
    assert np.array_equal(out, np.full((2, 2), 5))


def test_percentile_ramp_block():
    block = np.arange(49, dtype=np.uint8).reshape(7, 7)
    out = compress_block_percentile(block, make_percentile_scheme(2))
    assert np.array_equal(out, [[0, 16], [32, 48]])


def test_percentile_median_rounds_half_even():
    block = np.array([[9, 1], [3, 7]], dtype=np.uint8)
    out = compress_block_percentile(block, make_percentile_scheme(1))
    # sorted [1,3,7,9]; index round(0.5 * 3) = 2 under half-even
    assert out.tolist() == [[7]]


@given(st.lists(st.integers(0, 255), min_size=49, max_size=49), st.integers(1, 4))
def test_percentile_matches_sorting_oracle(values, n):
    block = np.array(values, dtype=np.uint8).reshape(7, 7)
    scheme = make_percentile_scheme(n)
    out = compress_block_percentile(block, scheme)
    expected = percentile_loops(block.tolist(), scheme.quantiles)
    assert out.tolist() == expected


@given(st.lists(st.integers(0, 255), min_size=49, max_size=49), st.randoms())
def test_percentile_permutation_invariant_and_sampling(values, pyrandom):
    block = np.array(values, dtype=np.uint8).reshape(7, 7)
    scheme = make_percentile_scheme(2)
    out = compress_block_percentile(block, scheme)
    # outputs are samples: subset of the input multiset, extremes included
    assert set(out.ravel().tolist()) <= set(values)
    assert out.ravel()[0] == min(values) and out.ravel()[-1] == max(values)
    shuffled = list(values)
    pyrandom.shuffle(shuffled)
    out2 = compress_block_percentile(
        np.array(shuffled, dtype=np.uint8).reshape(7, 7), scheme
    )
    assert np.array_equal(out, out2)


def test_percentile_preserves_dtype():
    block = np.linspace(0.0, 1.0, 49, dtype=np.float32).reshape(7, 7)
    out = compress_block_percentile(block, make_percentile_scheme(2))
    assert out.dtype == np.float32


# --- sketch matrices ------------------------------------------------------------


def test_gen_matrix_zero_density_is_all_zero():
    mat = gen_sketch_matrix(4, 49, density=0.0, seed=123, kind="rmm")
    assert not mat.entries.any()


def test_gen_matrix_deterministic_per_seed():
    a = gen_sketch_matrix(4, 49, density=1.0, seed=7, kind="rmm")
    b = gen_sketch_matrix(4, 49, density=1.0, seed=7, kind="rmm")
    c = gen_sketch_matrix(4, 49, density=1.0, seed=8, kind="rmm")
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)
    assert a.entries.dtype == np.float32


def test_gen_matrix_density_binomial():
    # nonzero fraction over many small matrices concentrates at the density
    total = nonzero = 0
    for seed in range(10_000):
        mat = gen_sketch_matrix(2, 7, density=0.5, seed=seed, kind="ms")
        total += mat.entries.size
        nonzero += int(np.count_nonzero(mat.entries))
    frac = nonzero / total
    sigma = (0.25 / total) ** 0.5
    assert abs(frac - 0.5) < 3 * sigma


def test_rmm_matrix_requires_square_counts():
    with pytest.raises(DimensionMismatchError):
        SketchMatrix(kind="rmm", entries=np.zeros((3, 49), dtype=np.float32))


def test_matrix_entries_are_frozen():
    mat = gen_sketch_matrix(2, 7, seed=1, kind="ms")
    with pytest.raises(ValueError):
        mat.entries[0, 0] = 1.0


# --- rmm / ms kernels -----------------------------------------------------------


def test_rmm_zero_cases():
    mat = gen_sketch_matrix(4, 4, density=1.0, seed=3, kind="rmm")
    assert not compress_block_rmm(np.zeros((2, 2), dtype=np.float32), mat).any()
    zero_mat = gen_sketch_matrix(4, 4, density=0.0, seed=3, kind="rmm")
    block = np.arange(4, dtype=np.float32).reshape(2, 2)
    assert not compress_block_rmm(block, zero_mat).any()


def test_rmm_hand_product():
    mat = SketchMatrix(
        kind="rmm", entries=np.array([[2.0, 3.0, 5.0, 7.0]], dtype=np.float32)
    )
    block = np.array([[1, 0], [0, 0]], dtype=np.float32)
    assert compress_block_rmm(block, mat).tolist() == [[2.0]]


def test_rmm_dimension_mismatch():
    mat = gen_sketch_matrix(4, 49, seed=0, kind="rmm")
    with pytest.raises(DimensionMismatchError):
        compress_block_rmm(np.zeros((4, 4), dtype=np.float32), mat)
    ms = gen_sketch_matrix(2, 7, seed=0, kind="ms")
    with pytest.raises(DimensionMismatchError):
        compress_block_rmm(np.zeros((7, 7), dtype=np.float32), ms)


def test_ms_selector_matrix():
    mat = SketchMatrix(
        kind="ms", entries=np.eye(1, 7, dtype=np.float32)
    )
    block = np.arange(49, dtype=np.float32).reshape(7, 7)
    assert compress_block_ms(block, mat).tolist() == [[0.0]]
    assert not compress_block_ms(np.zeros((7, 7), dtype=np.float32), mat).any()


def test_kernels_match_loop_oracles(rng):
    for _ in range(50):
        block = rng.uniform(-10, 10, size=(7, 7))
        rmat = gen_sketch_matrix(4, 49, seed=int(rng.integers(1 << 32)), kind="rmm")
        out = compress_block_rmm(block.astype(np.float32), rmat)
        assert_close_rel(out, rmm_loops(block.astype(np.float32), rmat.entries))

        smat = gen_sketch_matrix(2, 7, seed=int(rng.integers(1 << 32)), kind="ms")
        out = compress_block_ms(block.astype(np.float32), smat)
        assert_close_rel(out, ms_loops(block.astype(np.float32), smat.entries))


def test_kernels_are_linear(rng):
    rmat = gen_sketch_matrix(4, 49, seed=11, kind="rmm")
    smat = gen_sketch_matrix(2, 7, seed=11, kind="ms")
    b1 = rng.uniform(-5, 5, size=(7, 7)).astype(np.float32)
    b2 = rng.uniform(-5, 5, size=(7, 7)).astype(np.float32)
    alpha = 3.25
    for kernel, mat in ((compress_block_rmm, rmat), (compress_block_ms, smat)):
        lhs = kernel(alpha * b1 + b2, mat)
        rhs = alpha * kernel(b1, mat).astype(np.float64) + kernel(b2, mat)
        assert_close_rel(lhs, rhs)


def test_ms_equals_kronecker_rmm(rng):
    # mat @ B @ mat.T flattens (row-major) to kron(mat, mat) @ vec(B)
    smat = gen_sketch_matrix(2, 7, seed=21, kind="ms")
    kron = SketchMatrix(kind="rmm", entries=np.kron(smat.entries, smat.entries))
    for _ in range(20):
        block = rng.uniform(-8, 8, size=(7, 7)).astype(np.float32)
        assert_close_rel(
            compress_block_ms(block, smat), compress_block_rmm(block, kron)
        )


# --- downgrading ----------------------------------------------------------------


def test_downgrade_constant():
    out = downgrade_area(np.ones((4, 4), dtype=np.uint8), (2, 2))
    assert np.array_equal(out, np.ones((2, 2)))


def test_downgrade_quadrant():
    img = np.zeros((4, 4), dtype=np.uint8)
    img[:2, :2] = 4
    out = downgrade_area(img, (2, 2))
    assert out.tolist() == [[4, 0], [0, 0]]


def test_downgrade_integer_factor_is_block_mean(rng):
    img = rng.integers(0, 256, size=(6, 6), dtype=np.uint8)
    out = downgrade_area(img.astype(np.float32), (2, 2))
    expected = block_mean_loops(img.tolist(), 3, 3)
    assert_close_rel(out, expected, rel=1e-6)
    # uint8 path: exact integer-sum mean, rounded half to even
    out_u8 = downgrade_area(img, (2, 2))
    rounded = np.rint(np.array(expected))
    assert np.array_equal(out_u8, rounded.astype(np.uint8))


def test_downgrade_fractional_factor_matches_exact_rationals(rng):
    img = rng.uniform(0, 255, size=(7, 5)).astype(np.float32)
    out = downgrade_area(img, (3, 2))
    expected = [[float(v) for v in row] for row in
                area_resample_exact(img.tolist(), 3, 2)]
    assert_close_rel(out, expected, rel=1e-6)


def test_downgrade_refuses_upscale():
    with pytest.raises(UpscaleNotSupportedError):
        downgrade_area(np.ones((4, 4), dtype=np.uint8), (8, 4))


# --- whole-image compression ----------------------------------------------------


def test_compress_image_dims_and_dtype(rng):
    img = rng.integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
    spec = _spec()
    out = compress_image(img, spec)
    assert out.pixels.shape == (64, 64, 3)
    assert out.pixels.dtype == np.uint8
    assert out.spec_digest == spec.digest()


def test_compress_image_constant():
    img = np.full((14, 14, 1), 9, dtype=np.uint8)
    out = compress_image(img, _spec(crop_to=14, resize_to=14))
    assert np.array_equal(out.pixels, np.full((4, 4, 1), 9))


@pytest.mark.parametrize("method", ["percentile", "rmm", "ms", "downgrade"])
def test_compress_image_equals_per_block_kernels(method, rng):
    spec = _spec(method=method, crop_to=14, resize_to=14)
    matrix = matrix_for_spec(spec)
    img = rng.integers(0, 256, size=(14, 14, 1), dtype=np.uint8)
    out = compress_image(img, spec, matrix)

    scheme = make_percentile_scheme(2)
    for bi in range(2):
        for bj in range(2):
            block = img[bi * 7 : bi * 7 + 7, bj * 7 : bj * 7 + 7, 0]
            if method == "percentile":
                expected = compress_block_percentile(block, scheme)
            elif method == "rmm":
                expected = compress_block_rmm(block, matrix)
            elif method == "ms":
                expected = compress_block_ms(block, matrix)
            else:
                expected = downgrade_area(block, (2, 2))
            got = out.pixels[bi * 2 : bi * 2 + 2, bj * 2 : bj * 2 + 2, 0]
            if method in ("percentile", "downgrade"):
                assert np.array_equal(got, expected)
            else:
                assert_close_rel(got, expected, rel=1e-6)


def test_compress_image_channels_independent(rng):
    img = rng.integers(0, 256, size=(28, 28, 3), dtype=np.uint8)
    spec = _spec(crop_to=28, resize_to=28)
    whole = compress_image(img, spec)
    for k in range(3):
        alone = compress_image(img[:, :, k : k + 1], spec)
        assert np.array_equal(whole.pixels[:, :, k], alone.pixels[:, :, 0])


def test_compress_image_downgrade_matches_whole_image_resample(rng):
    img = rng.integers(0, 256, size=(28, 28, 2), dtype=np.uint8)
    spec = _spec(method="downgrade", crop_to=28, resize_to=28)
    out = compress_image(img, spec)
    assert np.array_equal(out.pixels, downgrade_area(img, (8, 8)))


def test_compress_image_validation(rng):
    img = rng.integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
    with pytest.raises(DimensionMismatchError):
        compress_image(img, _spec(method="rmm"))  # matrix required
    wrong_kind = matrix_for_spec(_spec(method="ms"))
    with pytest.raises(DimensionMismatchError):
        compress_image(img, _spec(method="rmm"), wrong_kind)
    with pytest.raises(ValidationError):
        compress_image(img.astype(np.int32), _spec())
    from locomp.errors import NonDivisibleError

    with pytest.raises(NonDivisibleError):
        compress_image(img[:220], _spec())


def test_compressed_image_pixels_frozen(rng):
    img = rng.integers(0, 256, size=(14, 14, 1), dtype=np.uint8)
    out = compress_image(img, _spec(crop_to=14, resize_to=14))
    with pytest.raises(ValueError):
        out.pixels[0, 0, 0] = 1
