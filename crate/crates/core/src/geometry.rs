//! Differential geometry of a graph surface `(x, y, h(x, y))`.
//!
//! Every quantity is written in terms of Cartesian partial derivatives of the
//! height `h` on the parameter domain. Christoffel symbols and the shape
//! operator never appear as arrays; they are already folded into the closed
//! forms below.
//!
//! Notation used in comments: `dh` is the gradient proxy `[h_x, h_y]`,
//! `|g| = 1 + dh.dh`, and `dh . A . dh` is the quadratic form of a 2x2 matrix `A`.

use std::sync::Arc;

use crate::grid::{Axis, Derivative, Grid, GridError, PackedPair, ScalarField, VectorField2};

/// First and second spectral derivatives of a scalar field.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub d: VectorField2,
    /// `[f_xx, f_xy, f_yy]`
    pub d2: [ScalarField; 3],
}

impl Derivatives {
    /// Derivatives of two fields on one grid, sharing transforms.
    pub fn of_pair(a: &ScalarField, b: &ScalarField) -> (Self, Self) {
        let packed = PackedPair::new(a, b);
        let [(ax, bx), (ay, by), (axx, bxx), (axy, bxy), (ayy, byy)] = [
            Derivative::X,
            Derivative::Y,
            Derivative::XX,
            Derivative::XY,
            Derivative::YY,
        ]
        .map(|op| packed.derivative(op));
        (
            Derivatives {
                d: VectorField2 { x: ax, y: ay },
                d2: [axx, axy, ayy],
            },
            Derivatives {
                d: VectorField2 { x: bx, y: by },
                d2: [bxx, bxy, byy],
            },
        )
    }

    pub fn of(f: &ScalarField) -> Self {
        let s = f.spectrum();
        let d = VectorField2 {
            x: s.partial(Axis::X).into_field(),
            y: s.partial(Axis::Y).into_field(),
        };
        let [xx, xy, yy] = s.partial2();
        Derivatives {
            d,
            d2: [xx.into_field(), xy.into_field(), yy.into_field()],
        }
    }

    /// Flat Laplacian `f_xx + f_yy`.
    pub fn flat_laplacian(&self) -> ScalarField {
        self.d2[0].zip_map(&self.d2[2], |a, b| a + b)
    }
}

/// Geometric quantities of the surface at one instant.
///
/// `hfrak` holds `H / sqrt|g|`, which coincides with the Laplace-Beltrami
/// operator applied to `h`; it is computed once and shared by every formula
/// that needs `Delta h`.
#[derive(Clone, Debug)]
pub struct GeometryCache {
    pub dh: VectorField2,
    /// `[h_xx, h_xy, h_yy]`
    pub d2h: [ScalarField; 3],
    pub g_det: ScalarField,
    pub sqrt_g: ScalarField,
    pub hfrak: ScalarField,
    pub mean_curv: ScalarField,
    /// Unit normal `[-h_x, -h_y, 1] / sqrt|g|`.
    pub normal: [ScalarField; 3],
}

#[inline]
fn quad_form(hx: f64, hy: f64, axx: f64, axy: f64, ayy: f64) -> f64 {
    hx * hx * axx + 2.0 * hx * hy * axy + hy * hy * ayy
}

impl GeometryCache {
    pub fn build(h: &ScalarField) -> Result<Self, GridError> {
        h.ensure_finite("height")?;
        Ok(Self::from_derivatives(&Derivatives::of(h)))
    }

    pub fn from_derivatives(dh: &Derivatives) -> Self {
        let grid = dh.d.grid().clone();
        let n = grid.len();
        let (hx, hy) = (dh.d.x.values(), dh.d.y.values());
        let [hxx, hxy, hyy] = [dh.d2[0].values(), dh.d2[1].values(), dh.d2[2].values()];

        let mut g_det = vec![0.0; n];
        let mut sqrt_g = vec![0.0; n];
        let mut hfrak = vec![0.0; n];
        let mut mean_curv = vec![0.0; n];
        let mut nx = vec![0.0; n];
        let mut ny = vec![0.0; n];
        let mut nz = vec![0.0; n];
        for k in 0..n {
            let g = 1.0 + hx[k] * hx[k] + hy[k] * hy[k];
            let sg = g.sqrt();
            let lap = hxx[k] + hyy[k];
            let hf = lap / g - quad_form(hx[k], hy[k], hxx[k], hxy[k], hyy[k]) / (g * g);
            g_det[k] = g;
            sqrt_g[k] = sg;
            hfrak[k] = hf;
            mean_curv[k] = sg * hf;
            nx[k] = -hx[k] / sg;
            ny[k] = -hy[k] / sg;
            nz[k] = 1.0 / sg;
        }
        let field = |v: Vec<f64>| ScalarField::from_values(&grid, v).expect("sized from grid");
        GeometryCache {
            dh: dh.d.clone(),
            d2h: dh.d2.clone(),
            g_det: field(g_det),
            sqrt_g: field(sqrt_g),
            hfrak: field(hfrak),
            mean_curv: field(mean_curv),
            normal: [field(nx), field(ny), field(nz)],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.g_det.grid()
    }

    /// `Delta h`, the same array as `hfrak`.
    pub fn laplace_beltrami_h(&self) -> &ScalarField {
        &self.hfrak
    }

    /// Surface area `int sqrt|g| dx dy`.
    pub fn area(&self) -> f64 {
        self.sqrt_g.integrate()
    }
}

/// Convenience wrapper for [`GeometryCache::build`].
pub fn build_cache(h: &ScalarField) -> Result<GeometryCache, GridError> {
    GeometryCache::build(h)
}

/// Laplace-Beltrami operator from precomputed derivatives of `f`:
/// `f_xx + f_yy - (dh . d2f . dh)/|g| - (df . dh) Delta h`.
pub fn laplace_beltrami_from(df: &Derivatives, cache: &GeometryCache) -> ScalarField {
    let n = cache.grid().len();
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let (fx, fy) = (df.d.x.values(), df.d.y.values());
    let [fxx, fxy, fyy] = [df.d2[0].values(), df.d2[1].values(), df.d2[2].values()];
    let g = cache.g_det.values();
    let lap_h = cache.hfrak.values();
    let out = (0..n)
        .map(|k| {
            fxx[k] + fyy[k]
                - quad_form(hx[k], hy[k], fxx[k], fxy[k], fyy[k]) / g[k]
                - (fx[k] * hx[k] + fy[k] * hy[k]) * lap_h[k]
        })
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

pub fn laplace_beltrami(f: &ScalarField, cache: &GeometryCache) -> ScalarField {
    laplace_beltrami_from(&Derivatives::of(f), cache)
}

/// `|w|^2 = w.w - (w.dh)^2/|g|` for a covariant tangent proxy `w`.
pub fn covariant_norm_sq(w: &VectorField2, cache: &GeometryCache) -> ScalarField {
    let (wx, wy) = (w.x.values(), w.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let g = cache.g_det.values();
    let out = (0..g.len())
        .map(|k| {
            let wh = wx[k] * hx[k] + wy[k] * hy[k];
            // clamp rounding below zero; the exact value is non-negative
            (wx[k] * wx[k] + wy[k] * wy[k] - wh * wh / g[k]).max(0.0)
        })
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

/// `|grad f|^2` on the surface.
pub fn covariant_grad_sq(f: &ScalarField, cache: &GeometryCache) -> ScalarField {
    covariant_norm_sq(&VectorField2::gradient(f), cache)
}

/// Spectral Jacobian `[[d_x w_x, d_x w_y], [d_y w_x, d_y w_y]]` of a proxy.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yx: ScalarField,
    pub yy: ScalarField,
}

impl Jacobian {
    pub fn of(w: &VectorField2) -> Self {
        let packed = PackedPair::new(&w.x, &w.y);
        let (xx, xy) = packed.derivative(Derivative::X);
        let (yx, yy) = packed.derivative(Derivative::Y);
        Jacobian { xx, xy, yx, yy }
    }
}

/// `div_C V` with the Jacobian of `vflat` supplied by the caller.
pub fn div_comp_material_from(
    vflat: &VectorField2,
    jac: &Jacobian,
    dth: &ScalarField,
    cache: &GeometryCache,
) -> ScalarField {
    let n = cache.grid().len();
    let (vx, vy) = (vflat.x.values(), vflat.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let g = cache.g_det.values();
    let lap_h = cache.hfrak.values();
    let dt = dth.values();
    let (jxx, jxy, jyx, jyy) = (jac.xx.values(), jac.xy.values(), jac.yx.values(), jac.yy.values());
    let out = (0..n)
        .map(|k| {
            let div = jxx[k] + jyy[k];
            let contr = hx[k] * hx[k] * jxx[k] + hx[k] * hy[k] * (jxy[k] + jyx[k]) + hy[k] * hy[k] * jyy[k];
            div - contr / g[k] - (dt[k] + vx[k] * hx[k] + vy[k] * hy[k]) * lap_h[k]
        })
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

/// Componentwise trace-divergence of the material velocity,
/// `d.v - (dh . dv . dh)/|g| - (h_t + v.dh) Delta h`.
pub fn div_comp_material(vflat: &VectorField2, dth: &ScalarField, cache: &GeometryCache) -> ScalarField {
    div_comp_material_from(vflat, &Jacobian::of(vflat), dth, cache)
}

/// Material velocity in ambient coordinates together with its normal speed.
#[derive(Clone, Debug)]
pub struct MaterialVelocity {
    pub components: [ScalarField; 3],
    pub normal_speed: ScalarField,
}

/// `V = [v, 0] + ((h_t + v.dh)/sqrt|g|) nu`, `v_perp = h_t/sqrt|g|`.
pub fn reconstruct_velocity(vflat: &VectorField2, dth: &ScalarField, cache: &GeometryCache) -> MaterialVelocity {
    let grid = cache.grid();
    let n = grid.len();
    let (vx, vy) = (vflat.x.values(), vflat.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let sg = cache.sqrt_g.values();
    let dt = dth.values();
    let [nu_x, nu_y, nu_z] = [
        cache.normal[0].values(),
        cache.normal[1].values(),
        cache.normal[2].values(),
    ];
    let mut c = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut vn = vec![0.0; n];
    for k in 0..n {
        let s = (dt[k] + vx[k] * hx[k] + vy[k] * hy[k]) / sg[k];
        c[0][k] = vx[k] + s * nu_x[k];
        c[1][k] = vy[k] + s * nu_y[k];
        c[2][k] = s * nu_z[k];
        vn[k] = dt[k] / sg[k];
    }
    let [c0, c1, c2] = c;
    let field = |v: Vec<f64>| ScalarField::from_values(grid, v).expect("sized from grid");
    MaterialVelocity {
        components: [field(c0), field(c1), field(c2)],
        normal_speed: field(vn),
    }
}

/// Material time derivative
/// `psi_t + v.dpsi - (dpsi.dh/|g|)(h_t + v.dh)`.
pub fn material_derivative(
    dpsi: &VectorField2,
    dtpsi: &ScalarField,
    vflat: &VectorField2,
    dth: &ScalarField,
    cache: &GeometryCache,
) -> ScalarField {
    let n = cache.grid().len();
    let (px, py) = (dpsi.x.values(), dpsi.y.values());
    let (vx, vy) = (vflat.x.values(), vflat.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let g = cache.g_det.values();
    let (pt, ht) = (dtpsi.values(), dth.values());
    let out = (0..n)
        .map(|k| {
            let ph = px[k] * hx[k] + py[k] * hy[k];
            pt[k] + vx[k] * px[k] + vy[k] * py[k] - ph / g[k] * (ht[k] + vx[k] * hx[k] + vy[k] * hy[k])
        })
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

/// The transport coefficient `psi Delta h + dpsi.dh/|g|` that multiplies
/// `h_t` in the Truesdell rate.
pub fn observer_transport(psi: &ScalarField, dpsi: &VectorField2, cache: &GeometryCache) -> ScalarField {
    let n = cache.grid().len();
    let (px, py) = (dpsi.x.values(), dpsi.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let g = cache.g_det.values();
    let lap_h = cache.hfrak.values();
    let p = psi.values();
    let out = (0..n)
        .map(|k| p[k] * lap_h[k] + (px[k] * hx[k] + py[k] * hy[k]) / g[k])
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

/// Scalar Truesdell rate in height proxies, with `dpsi` and the Jacobian of
/// `vflat` supplied by the caller.
pub fn truesdell_rate_from(
    psi: &ScalarField,
    dpsi: &VectorField2,
    dtpsi: &ScalarField,
    vflat: &VectorField2,
    jac: &Jacobian,
    dth: &ScalarField,
    cache: &GeometryCache,
) -> ScalarField {
    let n = cache.grid().len();
    let transport = observer_transport(psi, dpsi, cache);
    let tr = transport.values();
    let (px, py) = (dpsi.x.values(), dpsi.y.values());
    let (vx, vy) = (vflat.x.values(), vflat.y.values());
    let (hx, hy) = (cache.dh.x.values(), cache.dh.y.values());
    let g = cache.g_det.values();
    let (p, pt, ht) = (psi.values(), dtpsi.values(), dth.values());
    let (jxx, jxy, jyx, jyy) = (jac.xx.values(), jac.xy.values(), jac.yx.values(), jac.yy.values());
    let out = (0..n)
        .map(|k| {
            let contr = hx[k] * hx[k] * jxx[k] + hx[k] * hy[k] * (jxy[k] + jyx[k]) + hy[k] * hy[k] * jyy[k];
            let stretch = jxx[k] + jyy[k] - contr / g[k];
            let advect = vx[k] * (px[k] - tr[k] * hx[k]) + vy[k] * (py[k] - tr[k] * hy[k]);
            pt[k] - tr[k] * ht[k] + p[k] * stretch + advect
        })
        .collect();
    ScalarField::from_values(cache.grid(), out).expect("sized from grid")
}

/// Scalar Truesdell time derivative of `psi` for the material motion
/// described by `(vflat, dth)`.
pub fn truesdell_rate(
    psi: &ScalarField,
    dtpsi: &ScalarField,
    vflat: &VectorField2,
    dth: &ScalarField,
    cache: &GeometryCache,
) -> ScalarField {
    let dpsi = VectorField2::gradient(psi);
    truesdell_rate_from(psi, &dpsi, dtpsi, vflat, &Jacobian::of(vflat), dth, cache)
}

/// `int_S f dS = int f sqrt|g| dx dy`.
pub fn surface_integral(f: &ScalarField, cache: &GeometryCache) -> f64 {
    let sum: f64 = f.values().iter().zip(cache.sqrt_g.values()).map(|(a, b)| a * b).sum();
    sum * cache.grid().area() / cache.grid().len() as f64
}
