import numpy as np
import pytest

from xmhd.linearize import RhsBlowupError
from xmhd.mhd import (BX, BY, BZ, EN, MX, MY, MZ, NVAR, RHO, Boundary,
                      MHDParams, StateGrid, apply_bc, conserved_totals,
                      discrete_div_b, mhd_rhs, read_checkpoint,
                      write_checkpoint)


def uniform_state(nx=16, ny=12, dx=0.1, dy=0.15):
    g = StateGrid.zeros(nx, ny, dx, dy)
    g.data[RHO] = 1.3
    g.data[MX], g.data[MY], g.data[MZ] = 0.4, -0.2, 0.7
    g.data[BX], g.data[BY], g.data[BZ] = 0.5, -0.3, 2.0
    g.data[EN] = 5.0
    return g


def random_state(rng, nx=16, ny=16, dx=0.1, dy=0.1):
    g = StateGrid.zeros(nx, ny, dx, dy)
    g.data[:] = 0.1 * rng.standard_normal((NVAR, ny, nx))
    g.data[RHO] = 1.0 + 0.1 * rng.standard_normal((ny, nx))
    g.data[EN] = 6.0 + 0.1 * rng.standard_normal((ny, nx))
    return g


def test_uniform_state_has_zero_rhs():
    params = MHDParams(mu=0.1, eta=0.05, kappa=0.2)
    out = mhd_rhs(uniform_state(), params)
    assert np.abs(out).max() <= 1e-13


def test_pressure_gradient_matches_stencil_oracle():
    nx, ny = 32, 8
    lx = 2.5
    dx, dy = lx / nx, 1.0 / ny
    x = -1.25 + (np.arange(nx) + 0.5) * dx
    g = StateGrid.zeros(nx, ny, dx, dy)
    g.data[RHO] = 1.0
    pres = 1.0 + 0.1 * np.sin(2 * np.pi * np.tile(x, (ny, 1)) / lx)
    g.data[EN] = pres / (5.0 / 3.0 - 1.0)
    out = mhd_rhs(g, MHDParams(mu=0.0, eta=0.0, kappa=0.0)).reshape(NVAR, ny, nx)
    padded = np.concatenate([pres[:, -1:], pres, pres[:, :1]], axis=1)
    oracle = -(padded[:, 2:] - padded[:, :-2]) / (2 * dx)
    assert np.abs(out[MX] - oracle).max() <= 1e-13
    for idx in (RHO, MY, MZ, BX, BY, BZ):
        assert np.abs(out[idx]).max() <= 1e-13


def test_ideal_induction_vanishes_at_rest():
    from xmhd.scenarios import init_reconnection, make_scenario

    spec = make_scenario("recon-VI", nx=48, ny=48)
    state = init_reconnection(spec)
    params = MHDParams(mu=0.0, eta=0.0, kappa=0.0,
                       bc_x=spec.params.bc_x, bc_y=spec.params.bc_y)
    out = mhd_rhs(state, params).reshape(NVAR, 48, 48)
    for idx in (BX, BY, BZ):
        assert np.abs(out[idx]).max() <= 1e-12


def test_translation_equivariance():
    rng = np.random.default_rng(3)
    g = random_state(rng)
    params = MHDParams(mu=0.03, eta=0.02, kappa=0.1)
    base = mhd_rhs(g, params).reshape(NVAR, 16, 16)
    rolled = StateGrid(16, 16, 0.1, 0.1, np.roll(g.data, 1, axis=2))
    out = mhd_rhs(rolled, params).reshape(NVAR, 16, 16)
    assert np.array_equal(np.roll(base, 1, axis=2), out)


def test_rhs_signals_nonfinite_cells():
    g = uniform_state()
    g.data[RHO, 4, 5] = 0.0  # division blows up the velocity
    with pytest.raises(RhsBlowupError) as err:
        mhd_rhs(g, MHDParams(mu=0.0, eta=0.0, kappa=0.0))
    assert err.value.cells


def test_discrete_div_b_linear_field():
    g = StateGrid.zeros(16, 16, 0.1, 0.1)
    x = (np.arange(16) + 0.5) * 0.1
    xx, yy = np.meshgrid(x, x)
    g.data[BX] = xx
    g.data[BY] = -yy
    div = discrete_div_b(g, MHDParams(mu=0, eta=0, kappa=0))
    # centered differences are exact on linear fields away from the wrap
    assert np.abs(div[2:-2, 2:-2]).max() <= 1e-13


def test_discrete_div_b_uniform_field():
    g = uniform_state()
    div = discrete_div_b(g, MHDParams(mu=0, eta=0, kappa=0))
    assert np.abs(div).max() == 0.0


def test_discrete_div_b_reconnection_truncation():
    from xmhd.scenarios import init_reconnection, make_scenario

    spec = make_scenario("recon-VI", nx=64, ny=64)
    state = init_reconnection(spec)
    div = discrete_div_b(state, spec.params)
    bnorm = np.linalg.norm(np.stack([state.data[BX], state.data[BY]]))
    assert np.abs(div).max() <= 1e-3 * bnorm


def test_rhs_preserves_discrete_div_b_identity():
    # d/dt of the centered divergence is zero for the induction rhs itself
    rng = np.random.default_rng(17)
    params = MHDParams(mu=0.02, eta=0.04, kappa=0.05)
    g = random_state(rng)
    out = mhd_rhs(g, params).reshape(NVAR, 16, 16)
    gdot = StateGrid(16, 16, 0.1, 0.1, np.zeros((NVAR, 16, 16)))
    gdot.data[BX] = out[BX]
    gdot.data[BY] = out[BY]
    div_rate = discrete_div_b(gdot, params)
    scale = max(np.abs(out[BX]).max(), np.abs(out[BY]).max()) / 0.1
    assert np.abs(div_rate).max() <= 1e-12 * max(1.0, scale)


def test_conserved_totals():
    g = StateGrid.zeros(10, 10, 0.2, 0.2)
    g.data[RHO] = 1.0
    totals = conserved_totals(g)
    assert totals["rho"] == pytest.approx(4.0, rel=1e-14)
    rng = np.random.default_rng(23)
    g = random_state(rng, 10, 10, 0.2, 0.2)
    totals = conserved_totals(g)
    for idx, name in enumerate(("rho", "mx", "my", "mz", "bx", "by", "bz", "en")):
        oracle = float(sum(g.data[idx].ravel())) * 0.04
        assert totals[name] == pytest.approx(oracle, rel=1e-13, abs=1e-15)
    doubled = StateGrid(10, 10, 0.2, 0.2, 2.0 * g.data)
    for name, val in conserved_totals(doubled).items():
        assert val == pytest.approx(2.0 * totals[name], rel=1e-13, abs=1e-15)


def test_apply_bc_periodic():
    rng = np.random.default_rng(29)
    g = random_state(rng, nx=4, ny=4)
    padded = apply_bc(g, MHDParams(mu=0, eta=0, kappa=0))
    assert padded.shape == (NVAR, 6, 6)
    assert np.array_equal(padded[:, 1:-1, 0], g.data[:, :, -1])
    assert np.array_equal(padded[:, 1:-1, -1], g.data[:, :, 0])
    assert np.array_equal(padded[:, 0, 1:-1], g.data[:, -1, :])


def test_apply_bc_reflecting_parities():
    rng = np.random.default_rng(31)
    g = random_state(rng, nx=4, ny=4)
    params = MHDParams(mu=0, eta=0, kappa=0,
                       bc_x=Boundary.PERIODIC, bc_y=Boundary.REFLECTING)
    padded = apply_bc(g, params)
    inner = g.data
    # wall-normal momentum and field are odd, everything else even
    assert np.array_equal(padded[MY, 0, 1:-1], -inner[MY, 0, :])
    assert np.array_equal(padded[BY, 0, 1:-1], -inner[BY, 0, :])
    assert np.array_equal(padded[RHO, 0, 1:-1], inner[RHO, 0, :])
    assert np.array_equal(padded[MX, 0, 1:-1], inner[MX, 0, :])
    assert np.array_equal(padded[BX, -1, 1:-1], inner[BX, -1, :])
    assert np.array_equal(padded[EN, -1, 1:-1], inner[EN, -1, :])
    assert np.array_equal(padded[MY, -1, 1:-1], -inner[MY, -1, :])


def test_rhs_consistency_order_two():
    # manufactured smooth fields; continuum rhs from a symbolic oracle
    import sympy as sp

    x, y = sp.symbols("x y")
    gamma = sp.Rational(5, 3)
    mu, eta, kap = sp.Rational(3, 100), sp.Rational(2, 100), sp.Rational(1, 10)
    tp = 2 * sp.pi
    rho = 1 + sp.Rational(1, 5) * sp.sin(tp * x) * sp.cos(tp * y)
    vx = sp.Rational(1, 5) * sp.sin(tp * y) + sp.Rational(1, 10) * sp.cos(tp * x)
    vy = sp.Rational(1, 5) * sp.cos(tp * x) * sp.sin(tp * y)
    vz = sp.Rational(1, 10) * sp.sin(tp * x + tp * y)
    bx = sp.Rational(1, 2) + sp.Rational(1, 5) * sp.cos(tp * y)
    by = sp.Rational(1, 5) * sp.sin(tp * x)
    bz = 1 + sp.Rational(1, 10) * sp.cos(tp * x) * sp.cos(tp * y)
    pres = 1 + sp.Rational(1, 5) * sp.cos(tp * x) * sp.sin(tp * y)

    b2 = bx ** 2 + by ** 2 + bz ** 2
    en = pres / (gamma - 1) + rho * (vx ** 2 + vy ** 2 + vz ** 2) / 2 + b2 / 2
    ptot = pres + b2 / 2
    bdotv = bx * vx + by * vy + bz * vz
    ddx = lambda f: sp.diff(f, x)
    ddy = lambda f: sp.diff(f, y)
    divv = ddx(vx) + ddy(vy)
    tau_xx = 2 * ddx(vx) - sp.Rational(2, 3) * divv
    tau_yy = 2 * ddy(vy) - sp.Rational(2, 3) * divv
    tau_xy = ddy(vx) + ddx(vy)
    tau_xz = ddx(vz)
    tau_yz = ddy(vz)
    curlz = ddx(by) - ddy(bx)
    cond = mu * kap * gamma / (gamma - 1)
    emf = vy * bx - by * vx

    exact = [
        -(ddx(rho * vx) + ddy(rho * vy)),
        -(ddx(rho * vx * vx + ptot - bx * bx) + ddy(rho * vy * vx - by * bx))
        + mu * (ddx(tau_xx) + ddy(tau_xy)),
        -(ddx(rho * vx * vy - bx * by) + ddy(rho * vy * vy + ptot - by * by))
        + mu * (ddx(tau_xy) + ddy(tau_yy)),
        -(ddx(rho * vx * vz - bx * bz) + ddy(rho * vy * vz - by * bz))
        + mu * (ddx(tau_xz) + ddy(tau_yz)),
        -ddy(emf) - eta * ddy(curlz),
        ddx(emf) + eta * ddx(curlz),
        -(ddx(vx * bz - bx * vz) + ddy(vy * bz - by * vz))
        + eta * (ddx(ddx(bz)) + ddy(ddy(bz))),
        -(ddx((en + ptot) * vx - bx * bdotv) + ddy((en + ptot) * vy - by * bdotv))
        + ddx(mu * (tau_xx * vx + tau_xy * vy + tau_xz * vz) + cond * ddx(pres / rho)
              + eta * (ddx(b2) / 2 - (bx * ddx(bx) + by * ddy(bx))))
        + ddy(mu * (tau_xy * vx + tau_yy * vy + tau_yz * vz) + cond * ddy(pres / rho)
              + eta * (ddy(b2) / 2 - (bx * ddx(by) + by * ddy(by)))),
    ]
    fields = [rho, rho * vx, rho * vy, rho * vz, bx, by, bz, en]
    f_np = [sp.lambdify((x, y), f, "numpy") for f in fields]
    r_np = [sp.lambdify((x, y), r, "numpy") for r in exact]

    params = MHDParams(mu=float(mu), eta=float(eta), kappa=float(kap))
    errs = []
    for n in (16, 32, 64):
        d = 1.0 / n
        xc = (np.arange(n) + 0.5) * d
        xx, yy = np.meshgrid(xc, xc)
        g = StateGrid.zeros(n, n, d, d)
        for idx, f in enumerate(f_np):
            g.data[idx] = np.broadcast_to(f(xx, yy), (n, n))
        num = mhd_rhs(g, params).reshape(NVAR, n, n)
        ref = np.stack([np.broadcast_to(r(xx, yy), (n, n)) for r in r_np])
        errs.append(np.abs(num - ref).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(37)
    g = random_state(rng, nx=12, ny=7, dx=0.05, dy=0.08)
    path = tmp_path / "state.chk"
    write_checkpoint(path, g, 1.25)
    loaded, t = read_checkpoint(path)
    assert t == 1.25
    assert loaded.nx == 12 and loaded.ny == 7
    assert loaded.dx == 0.05 and loaded.dy == 0.08
    assert np.array_equal(loaded.data, g.data)
    # header layout: magic, version, dims
    raw = path.read_bytes()
    assert raw[:4] == b"XMHD"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == 12
    assert int.from_bytes(raw[12:16], "little") == 7
    assert int.from_bytes(raw[16:20], "little") == 8


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.chk"
    path.write_bytes(b"NOPE" + bytes(60))
    with pytest.raises(ValueError):
        read_checkpoint(path)
