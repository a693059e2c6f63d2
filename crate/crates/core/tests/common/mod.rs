//! Independent finite-difference oracles shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use gradflow::geometry::{
    build_cache, covariant_norm_sq, div_comp_material, laplace_beltrami, reconstruct_velocity, truesdell_rate,
};
use gradflow::{Grid, ScalarField, VectorField2};

pub fn sample_h(x: f64, y: f64) -> f64 {
    0.3 * x.sin() * (2.0 * y).cos() + 0.2 * (x + y).cos()
}

pub fn sample_f(x: f64, y: f64) -> f64 {
    x.sin() + 0.5 * (2.0 * y).cos() * x.cos()
}

pub fn sample_psi(x: f64, y: f64) -> f64 {
    0.3 + 0.1 * x.cos() * y.sin()
}

pub fn sample_dtpsi(x: f64, y: f64) -> f64 {
    0.2 * (x + 2.0 * y).sin()
}

pub fn sample_dth(x: f64, y: f64) -> f64 {
    0.1 * (2.0 * x - y).cos()
}

pub fn sample_v(x: f64, y: f64) -> [f64; 2] {
    [0.2 * (x - y).sin(), 0.1 * (2.0 * y).cos() + 0.05 * x.cos()]
}

/// Fourth-order central differences on a periodic grid, `values[i * n + j]`.
pub struct Fd {
    n: usize,
    h: f64,
}

impl Fd {
    pub fn new(n: usize, length: f64) -> Self {
        Fd {
            n,
            h: length / n as f64,
        }
    }

    fn diff(&self, f: &[f64], along_x: bool) -> Vec<f64> {
        let n = self.n;
        let at = |i: isize, j: isize| {
            let (i, j) = (i.rem_euclid(n as isize) as usize, j.rem_euclid(n as isize) as usize);
            f[i * n + j]
        };
        let mut out = vec![0.0; n * n];
        for i in 0..n as isize {
            for j in 0..n as isize {
                let s = |k: isize| if along_x { at(i + k, j) } else { at(i, j + k) };
                out[i as usize * n + j as usize] = (-s(2) + 8.0 * s(1) - 8.0 * s(-1) + s(-2)) / (12.0 * self.h);
            }
        }
        out
    }

    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        self.diff(f, true)
    }

    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        self.diff(f, false)
    }
}

fn sample(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    ScalarField::from_fn(grid, f).into_values()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max-norm distance between every geometry operation and its
/// finite-difference oracle on an `n x n` grid of the `2 pi` torus.
pub fn geometry_errors(n: usize) -> Vec<(&'static str, f64)> {
    let grid = Grid::square(n).unwrap();
    let fd = Fd::new(n, 2.0 * std::f64::consts::PI);
    let len = n * n;

    let h_field = ScalarField::from_fn(&grid, sample_h);
    let h = h_field.values().to_vec();
    let f = sample(&grid, sample_f);
    let psi = sample(&grid, sample_psi);
    let dtpsi = sample(&grid, sample_dtpsi);
    let dth = sample(&grid, sample_dth);
    let vx = sample(&grid, |x, y| sample_v(x, y)[0]);
    let vy = sample(&grid, |x, y| sample_v(x, y)[1]);

    let (hx, hy) = (fd.dx(&h), fd.dy(&h));
    // metric g_ij = delta_ij + h_i h_j and its explicit inverse
    let mut det = vec![0.0; len];
    let mut ginv = vec![[0.0; 4]; len];
    for k in 0..len {
        let (a, b, d) = (1.0 + hx[k] * hx[k], hx[k] * hy[k], 1.0 + hy[k] * hy[k]);
        det[k] = a * d - b * b;
        ginv[k] = [d / det[k], -b / det[k], -b / det[k], a / det[k]];
    }
    let sqrt_g: Vec<f64> = det.iter().map(|d| d.sqrt()).collect();

    // divergence form (1/sqrt g) d_i (sqrt g g^ij d_j u)
    let lb = |u: &[f64]| -> Vec<f64> {
        let (ux, uy) = (fd.dx(u), fd.dy(u));
        let fx: Vec<f64> = (0..len)
            .map(|k| sqrt_g[k] * (ginv[k][0] * ux[k] + ginv[k][1] * uy[k]))
            .collect();
        let fy: Vec<f64> = (0..len)
            .map(|k| sqrt_g[k] * (ginv[k][2] * ux[k] + ginv[k][3] * uy[k]))
            .collect();
        let (a, b) = (fd.dx(&fx), fd.dy(&fy));
        (0..len).map(|k| (a[k] + b[k]) / sqrt_g[k]).collect()
    };
    let lb_f = lb(&f);
    let hfrak = lb(&h);
    // classical graph mean curvature d.(dh / sqrt g)
    let (mx, my) = (
        fd.dx(&(0..len).map(|k| hx[k] / sqrt_g[k]).collect::<Vec<_>>()),
        fd.dy(&(0..len).map(|k| hy[k] / sqrt_g[k]).collect::<Vec<_>>()),
    );
    let mean_curv: Vec<f64> = (0..len).map(|k| mx[k] + my[k]).collect();
    let normal: [Vec<f64>; 3] = [
        (0..len).map(|k| -hx[k] / sqrt_g[k]).collect(),
        (0..len).map(|k| -hy[k] / sqrt_g[k]).collect(),
        (0..len).map(|k| 1.0 / sqrt_g[k]).collect(),
    ];
    let norm_sq: Vec<f64> = (0..len)
        .map(|k| {
            let g = ginv[k];
            g[0] * vx[k] * vx[k] + (g[1] + g[2]) * vx[k] * vy[k] + g[3] * vy[k] * vy[k]
        })
        .collect();

    // ambient velocity with covariant tangential components v and normal
    // speed h_t / sqrt g
    let vel: [Vec<f64>; 3] = {
        let mut out = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for k in 0..len {
            let g = ginv[k];
            let (u1, u2) = (g[0] * vx[k] + g[1] * vy[k], g[2] * vx[k] + g[3] * vy[k]);
            let vn = dth[k] / sqrt_g[k];
            let tangent = [u1, u2, u1 * hx[k] + u2 * hy[k]];
            for c in 0..3 {
                out[c][k] = tangent[c] + vn * normal[c][k];
            }
        }
        out
    };
    // surface divergence g^ij d_i V . d_j X with d_x X = (1, 0, h_x), d_y X = (0, 1, h_y)
    let dvx: Vec<Vec<f64>> = vel.iter().map(|c| fd.dx(c)).collect();
    let dvy: Vec<Vec<f64>> = vel.iter().map(|c| fd.dy(c)).collect();
    let div_s: Vec<f64> = (0..len)
        .map(|k| {
            let xj = [[1.0, 0.0, hx[k]], [0.0, 1.0, hy[k]]];
            let di = [[dvx[0][k], dvx[1][k], dvx[2][k]], [dvy[0][k], dvy[1][k], dvy[2][k]]];
            let g = ginv[k];
            let gij = [[g[0], g[1]], [g[2], g[3]]];
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += gij[i][j] * (0..3).map(|c| di[i][c] * xj[j][c]).sum::<f64>();
                }
            }
            s
        })
        .collect();
    // material points move with the in-plane part of V in parameter space
    let (px, py) = (fd.dx(&psi), fd.dy(&psi));
    let truesdell: Vec<f64> = (0..len)
        .map(|k| dtpsi[k] + vel[0][k] * px[k] + vel[1][k] * py[k] + psi[k] * div_s[k])
        .collect();

    let cache = build_cache(&h_field).unwrap();
    let field = |v: Vec<f64>| ScalarField::from_values(&grid, v).unwrap();
    let vflat = VectorField2::new(field(vx.clone()), field(vy.clone())).unwrap();
    let dth_f = field(dth.clone());
    let psi_f = field(psi.clone());
    let recon = reconstruct_velocity(&vflat, &dth_f, &cache);
    let lib_truesdell = truesdell_rate(&psi_f, &field(dtpsi.clone()), &vflat, &dth_f, &cache);

    vec![
        ("g_det", max_diff(cache.g_det.values(), &det)),
        ("sqrt_g", max_diff(cache.sqrt_g.values(), &sqrt_g)),
        ("hfrak", max_diff(cache.hfrak.values(), &hfrak)),
        ("mean_curv", max_diff(cache.mean_curv.values(), &mean_curv)),
        ("normal_x", max_diff(cache.normal[0].values(), &normal[0])),
        ("normal_y", max_diff(cache.normal[1].values(), &normal[1])),
        ("normal_z", max_diff(cache.normal[2].values(), &normal[2])),
        (
            "laplace_beltrami",
            max_diff(laplace_beltrami(&field(f.clone()), &cache).values(), &lb_f),
        ),
        (
            "covariant_norm_sq",
            max_diff(covariant_norm_sq(&vflat, &cache).values(), &norm_sq),
        ),
        (
            "div_comp_material",
            max_diff(div_comp_material(&vflat, &dth_f, &cache).values(), &div_s),
        ),
        ("velocity_x", max_diff(recon.components[0].values(), &vel[0])),
        ("velocity_y", max_diff(recon.components[1].values(), &vel[1])),
        ("velocity_z", max_diff(recon.components[2].values(), &vel[2])),
        ("truesdell_rate", max_diff(lib_truesdell.values(), &truesdell)),
    ]
}

/// Observed orders `log2(e_n / e_2n)` of every geometry operation over the
/// ladder 32, 64, 128.
pub fn geometry_orders() -> Vec<(&'static str, [f64; 3], [f64; 2])> {
    let ladder: Vec<Vec<(&'static str, f64)>> = [32, 64, 128].iter().map(|&n| geometry_errors(n)).collect();
    (0..ladder[0].len())
        .map(|k| {
            let e = [ladder[0][k].1, ladder[1][k].1, ladder[2][k].1];
            (ladder[0][k].0, e, [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()])
        })
        .collect()
}

/// Largest deviation from the exact flat-plane reductions.
pub fn flat_reduction_error(n: usize) -> f64 {
    let grid = Grid::square(n).unwrap();
    let cache = build_cache(&ScalarField::zeros(&grid)).unwrap();
    let f = ScalarField::from_fn(&grid, sample_f);
    let psi = ScalarField::from_fn(&grid, sample_psi);
    let dtpsi = ScalarField::from_fn(&grid, sample_dtpsi);
    let vflat = VectorField2::new(
        ScalarField::from_fn(&grid, |x, y| sample_v(x, y)[0]),
        ScalarField::from_fn(&grid, |x, y| sample_v(x, y)[1]),
    )
    .unwrap();
    let zero = ScalarField::zeros(&grid);
    let mut err: f64 = 0.0;
    err = err.max(cache.g_det.values().iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max));
    err = err.max(cache.hfrak.max_abs()).max(cache.mean_curv.max_abs());
    err = err.max(cache.normal[0].max_abs()).max(cache.normal[1].max_abs());
    err = err.max(
        cache.normal[2]
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max),
    );
    // Laplace-Beltrami is the flat Laplacian
    err = err.max(laplace_beltrami(&f, &cache).max_abs_diff(&f.laplacian()));
    // Truesdell rate is psi_t + div(psi v)
    let flux = VectorField2::new(psi.zip_map(&vflat.x, |a, b| a * b), psi.zip_map(&vflat.y, |a, b| a * b)).unwrap();
    let div = flux
        .x
        .partial(gradflow::Axis::X)
        .zip_map(&flux.y.partial(gradflow::Axis::Y), |a, b| a + b);
    let expected = dtpsi.zip_map(&div, |a, b| a + b);
    err = err.max(truesdell_rate(&psi, &dtpsi, &vflat, &zero, &cache).max_abs_diff(&expected));
    err
}

/// Energy presets exercised by the variational checks.
pub fn presets() -> Vec<gradflow::EnergyModel> {
    use gradflow::EnergyModel;
    vec![
        EnergyModel::constant(1.3).unwrap(),
        EnergyModel::linear(-0.7).unwrap(),
        EnergyModel::quadratic(2.0).unwrap(),
        EnergyModel::flory_huggins(1.0, 0.75, 0.0).unwrap(),
        EnergyModel::flory_huggins(2.0, 0.5, 1.5).unwrap(),
    ]
}

/// Central-difference errors of the two first variations of the energy at
/// steps `eps` and `eps / 2`, as `[(psi_err, psi_err_half), (h_err, h_err_half)]`.
///
/// The density direction is checked against `int f'(psi) phi dS`; the
/// height direction, with `psi` held fixed in parameter space, against
/// `-int eta (f H + f' dpsi.dh / sqrt g) dx`.
pub fn variational_errors(energy: gradflow::EnergyModel, eps: f64) -> [(f64, f64); 2] {
    use gradflow::geometry::surface_integral;
    use gradflow::ClampCounter;
    let grid = Grid::square(64).unwrap();
    let clamps = ClampCounter::new();
    let h = ScalarField::from_fn(&grid, sample_h);
    let psi = ScalarField::from_fn(&grid, sample_psi);
    let phi = ScalarField::from_fn(&grid, |x, y| (x - 2.0 * y).cos() + 0.5);
    let eta = ScalarField::from_fn(&grid, |x, y| {
        (2.0 * x + y).sin() + 0.3 * x.cos() + 0.4 * (x - 2.0 * y + 0.7).cos()
    });
    let cache = build_cache(&h).unwrap();
    let energy_at = |h: &ScalarField, psi: &ScalarField| energy.total_energy(psi, &build_cache(h).unwrap(), &clamps);

    let d = energy.functional_derivatives(&psi, &cache, &clamps);
    let exact_psi = surface_integral(&d.d_psi.zip_map(&phi, |a, b| a * b), &cache);
    let f = energy.eval_f(&psi, 0, &clamps).unwrap();
    let dpsi = VectorField2::gradient(&psi);
    let slope = dpsi.dot(&cache.dh);
    let density: Vec<f64> = (0..grid.len())
        .map(|k| {
            let fh = f.values()[k] * cache.mean_curv.values()[k];
            let tang = d.d_psi.values()[k] * slope.values()[k] / cache.sqrt_g.values()[k];
            -eta.values()[k] * (fh + tang)
        })
        .collect();
    let exact_h = ScalarField::from_values(&grid, density).unwrap().integrate();

    let central_psi = |e: f64| {
        let plus = psi.zip_map(&phi, |p, q| p + e * q);
        let minus = psi.zip_map(&phi, |p, q| p - e * q);
        ((energy_at(&h, &plus) - energy_at(&h, &minus)) / (2.0 * e) - exact_psi).abs()
    };
    let central_h = |e: f64| {
        let plus = h.zip_map(&eta, |p, q| p + e * q);
        let minus = h.zip_map(&eta, |p, q| p - e * q);
        ((energy_at(&plus, &psi) - energy_at(&minus, &psi)) / (2.0 * e) - exact_h).abs()
    };
    [
        (central_psi(eps), central_psi(eps / 2.0)),
        (central_h(eps), central_h(eps / 2.0)),
    ]
}
