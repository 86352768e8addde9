//! Explicit embedded Runge-Kutta pairs with first-same-as-last stages.

pub struct Tableau {
    pub c: &'static [f64],
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    /// Difference between the two weight vectors.
    pub e: &'static [f64],
    /// Order of the lower method, governs step adaptation.
    pub low_order: u32,
}

pub const DORMAND_PRINCE: Tableau = Tableau {
    c: &[0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
    a: &[
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    e: &[
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ],
    low_order: 4,
};

pub const BOGACKI_SHAMPINE: Tableau = Tableau {
    c: &[0.0, 0.5, 0.75, 1.0],
    a: &[&[], &[0.5], &[0.0, 0.75], &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]],
    b: &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0],
    e: &[2.0 / 9.0 - 7.0 / 24.0, 1.0 / 3.0 - 0.25, 4.0 / 9.0 - 1.0 / 3.0, -0.125],
    low_order: 2,
};

pub fn tableau(order: usize) -> &'static Tableau {
    if order == 3 {
        &BOGACKI_SHAMPINE
    } else {
        &DORMAND_PRINCE
    }
}

/// One trial step. `k[0]` must hold `f(t, y)`; on return the last stage
/// holds `f(t + h, y_new)`.
pub fn step<E>(
    tab: &Tableau,
    f: &mut dyn FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>],
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<(), E> {
    let n = y.len();
    let s = tab.c.len();
    let mut tmp = vec![0.0; n];
    for i in 1..s {
        for d in 0..n {
            let mut acc = 0.0;
            for (j, &a) in tab.a[i].iter().enumerate() {
                acc += a * k[j][d];
            }
            tmp[d] = y[d] + h * acc;
        }
        let (done, rest) = k.split_at_mut(i);
        let _ = done;
        f(t + tab.c[i] * h, &tmp, &mut rest[0])?;
    }
    for d in 0..n {
        let mut acc = 0.0;
        let mut e = 0.0;
        for j in 0..s {
            acc += tab.b[j] * k[j][d];
            e += tab.e[j] * k[j][d];
        }
        y_new[d] = y[d] + h * acc;
        err[d] = h * e;
    }
    Ok(())
}
