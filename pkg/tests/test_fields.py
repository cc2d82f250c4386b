import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfc_barycenter.errors import ShapeError
from mfc_barycenter.fields import (
    adjoint_D,
    apply_gamma_T,
    eval_D,
    eval_values,
    initial_inner,
    inner_dg,
    interpolate_cg,
    l1_norm_spatial,
    terminal_inner,
    trace_at_time,
)
from mfc_barycenter.mesh import MeshSpec, build_mesh
from mfc_barycenter.model import gamma_cyclic


def nodal(mesh, f):
    """Interpolate f(t, *x) on the Lobatto lattice (exact for polynomials in the space)."""
    grids = np.meshgrid(mesh.time.nodes, *(a.nodes for a in mesh.space), indexing="ij")
    return f(*grids)


@pytest.fixture
def mesh2d():
    return build_mesh(MeshSpec(2, (2, 3), (1.0, 1.0), n_t=2, T=1.0, k=2))


def test_D_of_constant(mesh2d):
    dt, grad = eval_D(mesh2d, np.full(mesh2d.cg_shape, 3.7))
    assert np.allclose(dt, 0, atol=1e-12) and np.allclose(grad, 0, atol=1e-12)


def test_D_of_time(mesh2d):
    dt, grad = eval_D(mesh2d, nodal(mesh2d, lambda t, x, y: t))
    assert np.allclose(dt, 1, atol=1e-12) and np.allclose(grad, 0, atol=1e-12)


def test_D_of_x_squared():
    mesh = build_mesh(MeshSpec(1, (3,), (1.0,), n_t=2, T=1.0, k=2))
    dt, grad = eval_D(mesh, nodal(mesh, lambda t, x: x**2))
    x = mesh.space_coords[:, 0]
    assert np.allclose(grad[0], 2 * x[None, :], atol=1e-12)
    assert np.allclose(dt, 0, atol=1e-12)


def test_D_shape_error(mesh2d):
    with pytest.raises(ShapeError):
        eval_D(mesh2d, np.zeros(5))


def test_gamma_slot_examples():
    g2 = gamma_cyclic(2)
    out = apply_gamma_T(np.array([3.0, 1.0]), g2)
    assert np.allclose(out, [2, -2])
    g3 = gamma_cyclic(3)
    assert np.allclose(apply_gamma_T(np.array([1.0, 2.0, 4.0]), g3), [-1, -2, 3])
    same = np.ones((3, 4, 5)) * 2.5
    assert np.allclose(apply_gamma_T(same, g3), 0)
    with pytest.raises(ShapeError):
        apply_gamma_T(np.ones(2), g3)


def test_inner_dg_examples():
    mesh = build_mesh(MeshSpec(3, (2, 2, 2), (1.0, 1.0, 1.0), n_t=2, T=1.0, k=1))
    a = np.full((mesh.n_tq, mesh.n_sq), 2.0)
    b = np.full_like(a, 3.0)
    assert inner_dg(mesh, a, b) == pytest.approx(6.0, abs=1e-12)
    assert inner_dg(mesh, 0 * a, b) == 0.0
    m1 = build_mesh(MeshSpec(1, (1,), (1.0,), n_t=1, T=1.0, k=2))
    t = np.repeat(m1.time_qpts[:, None], m1.n_sq, axis=1)
    assert inner_dg(m1, t, t) == pytest.approx(1 / 3, abs=1e-12)


def test_traces():
    mesh = build_mesh(MeshSpec(1, (2,), (1.0,), n_t=2, T=1.0, k=2))
    phi = nodal(mesh, lambda t, x: t)
    assert np.allclose(trace_at_time(mesh, phi, "T"), 1.0)
    assert np.allclose(trace_at_time(mesh, phi, "0"), 0.0)
    phi = nodal(mesh, lambda t, x: t * x)
    assert np.allclose(trace_at_time(mesh, phi, "T"), mesh.space_coords[:, 0], atol=1e-14)
    assert np.allclose(trace_at_time(mesh, np.full(mesh.cg_shape, 4.0), "T"), 4.0)


def test_terminal_inner_examples():
    mesh = build_mesh(MeshSpec(2, (2, 2), (1.0, 1.0), n_t=1, T=1.0, k=1))
    phis = np.stack([np.full(mesh.cg_shape, 0.25), np.full(mesh.cg_shape, 0.75)])
    assert terminal_inner(mesh, np.ones(mesh.n_sq), phis) == pytest.approx(1.0)
    assert terminal_inner(mesh, np.zeros(mesh.n_sq), phis) == 0.0
    m1 = build_mesh(MeshSpec(1, (1,), (1.0,), n_t=1, T=1.0, k=2))
    phi = nodal(m1, lambda t, x: x)
    assert terminal_inner(m1, m1.space_coords[:, 0], phi) == pytest.approx(1 / 3, abs=1e-14)


def test_l1_examples():
    mesh = build_mesh(MeshSpec(2, (2, 2), (1.0, 1.0), n_t=1, k=1))
    assert l1_norm_spatial(mesh, np.full(mesh.n_sq, 0.25)) == pytest.approx(0.25)
    assert l1_norm_spatial(mesh, np.full(mesh.n_sq, -0.25)) == pytest.approx(0.25)
    fine = build_mesh(MeshSpec(1, (64,), (1.0,), n_t=1, k=2))
    x = fine.space_coords[:, 0]
    assert l1_norm_spatial(fine, x - 0.5) == pytest.approx(0.25, abs=1e-3)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(1, 3), nt=st.integers(1, 3), nx=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_time_integration_by_parts(k, nt, nx, seed):
    rng = np.random.default_rng(seed)
    mesh = build_mesh(MeshSpec(2, (nx, 2), (1.0, 0.7), n_t=nt, T=1.3, k=k))
    phi = rng.standard_normal(mesh.cg_shape)
    c = rng.standard_normal(mesh.n_sq)
    dt, _ = eval_D(mesh, phi)
    lhs = inner_dg(mesh, np.broadcast_to(c, dt.shape), dt)
    rhs = terminal_inner(mesh, c, phi) - initial_inner(mesh, c, phi)
    assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))


@settings(max_examples=20, deadline=None)
@given(d=st.integers(1, 3), k=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_adjoint_consistency(d, k, seed):
    rng = np.random.default_rng(seed)
    mesh = build_mesh(MeshSpec(d, (2,) * d, (1.0,) * d, n_t=2, T=1.0, k=k))
    u = rng.standard_normal(mesh.cg_shape)
    a = rng.standard_normal((mesh.n_tq, mesh.n_sq))
    g = rng.standard_normal((d, mesh.n_tq, mesh.n_sq))
    v = rng.standard_normal((mesh.n_tq, mesh.n_sq))
    dt, grad = eval_D(mesh, u)
    lhs = inner_dg(mesh, dt, a) + inner_dg(mesh, grad, g) + inner_dg(mesh, eval_values(mesh, u), v)
    rhs = float(np.sum(u * adjoint_D(mesh, a, g, v)))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs)) * 10


def test_cg_interpolation_reproduces_polynomial():
    mesh = build_mesh(MeshSpec(2, (2, 2), (1.0, 2.0), n_t=2, T=1.0, k=2))
    phi = nodal(mesh, lambda t, x, y: t**2 + x * y - y**2)
    t = np.array([0.1, 0.77])
    xs = [np.array([0.3, 0.9]), np.array([0.2, 1.5, 1.9])]
    got = interpolate_cg(mesh, phi, t, xs)
    T, X, Y = np.meshgrid(t, *xs, indexing="ij")
    assert np.allclose(got, T**2 + X * Y - Y**2, atol=1e-12)
