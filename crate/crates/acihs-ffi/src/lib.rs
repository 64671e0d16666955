//! C ABI surface for the acihs library.
//!
//! Conventions: every fallible call returns an `AcihsStatus`; outputs go
//! through caller-provided buffers or opaque handles. Handles are created by
//! `*_new` and must be released with the matching `*_free`. All functions are
//! panic-safe: a panic inside the library is reported as
//! `ACIHS_NUMERICAL_ERROR` instead of unwinding across the boundary.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use acihs::confocal::{
    geodesic_flow, tangency_values, uhlenbeck_integrals, ConfocalFamily, PhasePoint,
};
use acihs::poly::{multiset_distance, roots, ComplexPolynomial};
use acihs::polymat::{direct_image_splitting, spectral_genus};
use num_complex::Complex64;

/// Result of a C ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcihsStatus {
    /// Success.
    AcihsOk = 0,
    /// A pointer argument was null.
    AcihsNullPointer = 1,
    /// An argument was out of range or inconsistent.
    AcihsInvalidArgument = 2,
    /// The computation failed numerically.
    AcihsNumericalError = 3,
}

use AcihsStatus::*;

/// Opaque handle to a confocal quadric family.
pub struct AcihsFamily(ConfocalFamily);

fn guard<F: FnOnce() -> AcihsStatus>(f: F) -> AcihsStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(AcihsNumericalError)
}

/// Create a family from `n` positive semiaxes. On success `*out` owns the
/// handle; release it with `acihs_family_free`.
///
/// # Safety
/// `axes` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acihs_family_new(
    axes: *const f64,
    n: usize,
    out: *mut *mut AcihsFamily,
) -> AcihsStatus {
    if axes.is_null() || out.is_null() {
        return AcihsNullPointer;
    }
    let axes = slice::from_raw_parts(axes, n).to_vec();
    guard(|| match ConfocalFamily::new(axes) {
        Ok(fam) => {
            *out = Box::into_raw(Box::new(AcihsFamily(fam)));
            AcihsOk
        }
        Err(_) => AcihsInvalidArgument,
    })
}

/// Release a family handle. Null is a no-op.
///
/// # Safety
/// `fam` must be null or a pointer returned by `acihs_family_new` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn acihs_family_free(fam: *mut AcihsFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Number of semiaxes of the family.
///
/// # Safety
/// `fam` must be a live family handle.
#[no_mangle]
pub unsafe extern "C" fn acihs_family_dim(fam: *const AcihsFamily) -> usize {
    if fam.is_null() {
        return 0;
    }
    (*fam).0.dim()
}

/// First integrals of the constrained system at the phase point (x, y);
/// writes `dim` values into `out`.
///
/// # Safety
/// `x`, `y` and `out` must point to `dim` doubles; `fam` must be live.
#[no_mangle]
pub unsafe extern "C" fn acihs_uhlenbeck_integrals(
    fam: *const AcihsFamily,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> AcihsStatus {
    if fam.is_null() || x.is_null() || y.is_null() || out.is_null() {
        return AcihsNullPointer;
    }
    let fam = &(*fam).0;
    let n = fam.dim();
    let p = PhasePoint::new(
        slice::from_raw_parts(x, n).to_vec(),
        slice::from_raw_parts(y, n).to_vec(),
    );
    let out = slice::from_raw_parts_mut(out, n);
    guard(|| {
        out.copy_from_slice(&uhlenbeck_integrals(&p, fam));
        AcihsOk
    })
}

/// Tangency spectrum of the line through the phase point (x, y); writes
/// `dim - 1` complex values as interleaved (re, im) pairs into `out`.
///
/// # Safety
/// `x` and `y` must point to `dim` doubles, `out` to `2 * (dim - 1)` doubles.
#[no_mangle]
pub unsafe extern "C" fn acihs_tangency_values(
    fam: *const AcihsFamily,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> AcihsStatus {
    if fam.is_null() || x.is_null() || y.is_null() || out.is_null() {
        return AcihsNullPointer;
    }
    let fam = &(*fam).0;
    let n = fam.dim();
    let p = PhasePoint::new(
        slice::from_raw_parts(x, n).to_vec(),
        slice::from_raw_parts(y, n).to_vec(),
    );
    let out = slice::from_raw_parts_mut(out, 2 * (n - 1));
    guard(|| match tangency_values(&p, fam) {
        Ok(spec) => {
            for (k, v) in spec.values.iter().enumerate() {
                out[2 * k] = v.re;
                out[2 * k + 1] = v.im;
            }
            AcihsOk
        }
        Err(_) => AcihsNumericalError,
    })
}

/// Integrate the geodesic flow on the ellipsoid from (x0, v0) and report the
/// worst relative drift of the sorted tangency spectrum in `*out_drift`.
///
/// # Safety
/// `x0` and `v0` must point to `dim` doubles; `out_drift` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acihs_geodesic_spectrum_drift(
    fam: *const AcihsFamily,
    x0: *const f64,
    v0: *const f64,
    dt: f64,
    steps: usize,
    out_drift: *mut f64,
) -> AcihsStatus {
    if fam.is_null() || x0.is_null() || v0.is_null() || out_drift.is_null() {
        return AcihsNullPointer;
    }
    if dt <= 0.0 || steps == 0 {
        return AcihsInvalidArgument;
    }
    let fam = &(*fam).0;
    let n = fam.dim();
    let x0 = slice::from_raw_parts(x0, n).to_vec();
    let v0 = slice::from_raw_parts(v0, n).to_vec();
    guard(|| {
        let traj = match geodesic_flow(&x0, &v0, fam, dt, steps) {
            Ok(t) => t,
            Err(_) => return AcihsNumericalError,
        };
        let base = match tangency_values(&traj[0].line(), fam) {
            Ok(s) => s.values,
            Err(_) => return AcihsNumericalError,
        };
        let scale = base.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
        let mut worst = 0.0_f64;
        for step in traj.iter().skip(1).step_by(100).chain(traj.last()) {
            match tangency_values(&step.line(), fam) {
                Ok(s) => worst = worst.max(multiset_distance(&s.values, &base) / scale),
                Err(_) => return AcihsNumericalError,
            }
        }
        *out_drift = worst;
        AcihsOk
    })
}

/// Roots of the polynomial with the given ascending complex coefficients
/// (interleaved re, im). Writes `n_coeffs - 1` interleaved roots.
///
/// # Safety
/// `coeffs` must point to `2 * n_coeffs` doubles and `out` to
/// `2 * (n_coeffs - 1)` doubles.
#[no_mangle]
pub unsafe extern "C" fn acihs_poly_roots(
    coeffs: *const f64,
    n_coeffs: usize,
    out: *mut f64,
) -> AcihsStatus {
    if coeffs.is_null() || out.is_null() {
        return AcihsNullPointer;
    }
    if n_coeffs < 2 {
        return AcihsInvalidArgument;
    }
    let raw = slice::from_raw_parts(coeffs, 2 * n_coeffs);
    let p = ComplexPolynomial::new(
        (0..n_coeffs)
            .map(|k| Complex64::new(raw[2 * k], raw[2 * k + 1]))
            .collect(),
    );
    // Trailing zero coefficients lower the degree; demand the full one so the
    // output length is predictable.
    if p.degree() != Some(n_coeffs - 1) {
        return AcihsInvalidArgument;
    }
    let out = slice::from_raw_parts_mut(out, 2 * (n_coeffs - 1));
    guard(|| match roots(&p) {
        Ok(rs) => {
            for (k, r) in rs.iter().enumerate() {
                out[2 * k] = r.re;
                out[2 * k + 1] = r.im;
            }
            AcihsOk
        }
        Err(_) => AcihsNumericalError,
    })
}

/// Genus of the smooth spectral curve of an r-sheeted cover with twist degree
/// `d` over a base of genus `g`.
#[no_mangle]
pub extern "C" fn acihs_spectral_genus(r: i64, d: i64, g: i64) -> i64 {
    spectral_genus(r, d, g)
}

/// Splitting type of the direct image of O(d) under an n-sheeted cover;
/// writes `n` integers.
///
/// # Safety
/// `out` must point to `n` writable 64-bit integers.
#[no_mangle]
pub unsafe extern "C" fn acihs_direct_image_splitting(
    n: i64,
    d: i64,
    out: *mut i64,
) -> AcihsStatus {
    if out.is_null() {
        return AcihsNullPointer;
    }
    if n < 1 {
        return AcihsInvalidArgument;
    }
    let out = slice::from_raw_parts_mut(out, n as usize);
    out.copy_from_slice(&direct_image_splitting(n, d));
    AcihsOk
}

/// Run the acceptance suite; returns the number of failed criteria.
#[no_mangle]
pub extern "C" fn acihs_selftest(seed: u64) -> u32 {
    catch_unwind(|| {
        acihs::selftest::run_all(seed)
            .iter()
            .filter(|r| !r.pass)
            .count() as u32
    })
    .unwrap_or(u32::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_round_trip_through_c_abi() {
        let axes = [1.0, 2.0, 4.0];
        let mut fam: *mut AcihsFamily = std::ptr::null_mut();
        unsafe {
            assert_eq!(acihs_family_new(axes.as_ptr(), 3, &mut fam), AcihsOk);
            assert_eq!(acihs_family_dim(fam), 3);
            let x = [1.0, 0.0, 0.0];
            let y = [0.0, 0.6, 0.8];
            let mut integrals = [0.0; 3];
            assert_eq!(
                acihs_uhlenbeck_integrals(fam, x.as_ptr(), y.as_ptr(), integrals.as_mut_ptr()),
                AcihsOk
            );
            assert!((integrals.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let mut spec = [0.0; 4];
            assert_eq!(
                acihs_tangency_values(fam, x.as_ptr(), y.as_ptr(), spec.as_mut_ptr()),
                AcihsOk
            );
            assert!(spec[1].abs() < 1e-9 && spec[3].abs() < 1e-9);
            acihs_family_free(fam);
        }
    }

    #[test]
    fn geodesic_drift_is_small() {
        let axes = [1.0, 2.0, 4.0];
        let mut fam: *mut AcihsFamily = std::ptr::null_mut();
        unsafe {
            assert_eq!(acihs_family_new(axes.as_ptr(), 3, &mut fam), AcihsOk);
            let x0 = [1.0, 0.0, 0.0];
            let v0 = [0.0, 0.6, 0.8];
            let mut drift = f64::NAN;
            assert_eq!(
                acihs_geodesic_spectrum_drift(fam, x0.as_ptr(), v0.as_ptr(), 1e-3, 1000, &mut drift),
                AcihsOk
            );
            assert!(drift < 1e-8, "drift {drift}");
            acihs_family_free(fam);
        }
    }

    #[test]
    fn null_and_invalid_arguments_are_reported() {
        unsafe {
            let mut fam: *mut AcihsFamily = std::ptr::null_mut();
            assert_eq!(
                acihs_family_new(std::ptr::null(), 0, &mut fam),
                AcihsNullPointer
            );
            let bad_axes = [1.0, -1.0];
            assert_eq!(
                acihs_family_new(bad_axes.as_ptr(), 2, &mut fam),
                AcihsInvalidArgument
            );
            let mut out = [0.0; 2];
            // x^2 encoded with a vanishing leading coefficient.
            let coeffs = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            assert_eq!(
                acihs_poly_roots(coeffs.as_ptr(), 3, out.as_mut_ptr()),
                AcihsInvalidArgument
            );
        }
    }

    #[test]
    fn roots_and_genus_formulas() {
        unsafe {
            // x^2 + 1 -> roots at +-i.
            let coeffs = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
            let mut out = [0.0; 4];
            assert_eq!(acihs_poly_roots(coeffs.as_ptr(), 3, out.as_mut_ptr()), AcihsOk);
            let mut ims = [out[1], out[3]];
            ims.sort_by(f64::total_cmp);
            assert!((ims[0] + 1.0).abs() < 1e-10 && (ims[1] - 1.0).abs() < 1e-10);
            let mut split = [0i64; 2];
            assert_eq!(acihs_direct_image_splitting(2, 3, split.as_mut_ptr()), AcihsOk);
            assert_eq!(split, [1, 1]);
        }
        assert_eq!(acihs_spectral_genus(2, 3, 0), 2);
    }
}
