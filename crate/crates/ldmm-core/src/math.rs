//! Float math that works with or without `std`.
//!
//! `core` has no transcendental functions, so the `libm` feature routes
//! them through the `libm` crate when `std` is disabled. All call sites
//! in this crate go through these wrappers.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("ldmm-core requires either the `std` or the `libm` feature");

macro_rules! forward {
    ($($name:ident => $libm:ident),* $(,)?) => {
        $(
            #[inline(always)]
            pub fn $name(x: f64) -> f64 {
                #[cfg(feature = "std")]
                {
                    x.$name()
                }
                #[cfg(not(feature = "std"))]
                {
                    libm::$libm(x)
                }
            }
        )*
    };
}

forward! {
    abs => fabs,
    sqrt => sqrt,
    exp => exp,
    ln => log,
    log10 => log10,
    cos => cos,
    sin => sin,
    floor => floor,
    ceil => ceil,
    round => round,
}
