//! Discounted-cash-flow indicators: net present value, internal rate of
//! return, static payback period and investment profit ratio.
//!
//! Each is available as a plain function, as an expression function
//! (`NPV`, `IRR`, `IPT`, `IPR`) and as a basic event of [`financial_events`].

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::events::{EventSpace, ExecContext};
use crate::expr::{ArgKind, FunctionDef, FunctionTable, Value};
use crate::project::select_field;
use crate::status::{finite, CalcError, CalcResult, Status};

/// Per-period discount rate; must exceed −1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct DiscountRate(f64);

impl DiscountRate {
    pub fn new(i: f64) -> CalcResult<Self> {
        if !i.is_finite() || i <= -1.0 {
            return Err(CalcError::domain(format!(
                "discount rate {i} must be a finite number greater than -1"
            )));
        }
        Ok(DiscountRate(i))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(1 + i)^(−t)`.
pub fn discount_factor(i: DiscountRate, t: u32) -> f64 {
    (1.0 + i.0).powi(-(t as i32))
}

fn npv_unchecked(ncf: &[f64], i: f64) -> f64 {
    let base = 1.0 + i;
    ncf.iter()
        .enumerate()
        .map(|(t, cf)| cf * base.powi(-(t as i32)))
        .sum()
}

/// Net present value of `ncf[0..=n]` at rate `i`.
pub fn npv(ncf: &[f64], i: DiscountRate) -> CalcResult {
    if ncf.is_empty() {
        return Err(CalcError::new(Status::EmptyField, "net cash flow series is empty"));
    }
    finite(npv_unchecked(ncf, i.0), "net present value")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrConfig {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Accepted |NPV| at the returned rate, in monetary units.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for IrrConfig {
    fn default() -> Self {
        IrrConfig {
            bracket_lo: -0.99,
            bracket_hi: 10.0,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Number of uniform subintervals scanned for a sign change before bisecting.
pub const IRR_SCAN_INTERVALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrrSolution {
    pub rate: f64,
    /// False when the flow changes sign more than once; the rate is then the
    /// smallest root found in the bracket.
    pub conventional: bool,
}

/// Counts sign changes of a series, ignoring zeros.
pub fn sign_changes(ncf: &[f64]) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for &cf in ncf.iter().filter(|cf| **cf != 0.0) {
        if last != 0.0 && last.signum() != cf.signum() {
            changes += 1;
        }
        last = cf;
    }
    changes
}

/// Internal rate of return by bracket scan then bisection.
///
/// The bracket is cut into [`IRR_SCAN_INTERVALS`] pieces; the first piece
/// whose ends differ in sign is bisected down to floating-point resolution
/// and the best point is accepted if its |NPV| ≤ `cfg.tol`.
pub fn irr(ncf: &[f64], cfg: &IrrConfig) -> CalcResult<IrrSolution> {
    if ncf.is_empty() {
        return Err(CalcError::new(Status::EmptyField, "net cash flow series is empty"));
    }
    if !(cfg.bracket_lo > -1.0 && cfg.bracket_lo < cfg.bracket_hi && cfg.bracket_hi.is_finite()) {
        return Err(CalcError::domain(format!(
            "IRR bracket [{}, {}] must satisfy -1 < lo < hi",
            cfg.bracket_lo, cfg.bracket_hi
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(CalcError::domain("IRR tolerance must be positive"));
    }
    let conventional = sign_changes(ncf) == 1;
    let solution = |rate| IrrSolution { rate, conventional };

    let width = cfg.bracket_hi - cfg.bracket_lo;
    let grid = |k: usize| {
        if k == IRR_SCAN_INTERVALS {
            cfg.bracket_hi
        } else {
            cfg.bracket_lo + width * k as f64 / IRR_SCAN_INTERVALS as f64
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    let mut found = None;
    for k in 0..=IRR_SCAN_INTERVALS {
        let x = grid(k);
        let fx = npv_unchecked(ncf, x);
        if fx.is_nan() {
            prev = None;
            continue;
        }
        if fx.abs() <= cfg.tol {
            return Ok(solution(x));
        }
        if let Some((a, fa)) = prev {
            if fa.signum() != fx.signum() {
                found = Some((a, fa, x));
                break;
            }
        }
        prev = Some((x, fx));
    }
    let (mut a, mut fa, mut b) = found.ok_or_else(|| {
        CalcError::new(
            Status::NoSignChange,
            format!(
                "net present value keeps one sign on [{}, {}]",
                cfg.bracket_lo, cfg.bracket_hi
            ),
        )
    })?;

    let mut best = (a, fa.abs());
    for _ in 0..cfg.max_iter {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = npv_unchecked(ncf, m);
        if fm.abs() < best.1 {
            best = (m, fm.abs());
        }
        if fm == 0.0 {
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    if best.1 <= cfg.tol {
        return Ok(solution(best.0));
    }
    Err(CalcError::new(
        Status::NoConvergence,
        format!(
            "bisection stopped at rate {} with |NPV| = {:e} above tolerance {:e}",
            best.0, best.1, cfg.tol
        ),
    ))
}

/// Static payback period in years, interpolated within the turnaround year.
pub fn payback_static(ncf: &[f64]) -> CalcResult {
    if ncf.is_empty() {
        return Err(CalcError::new(Status::EmptyField, "net cash flow series is empty"));
    }
    let mut cumulative = 0.0;
    for (t, &cf) in ncf.iter().enumerate() {
        let before = cumulative;
        cumulative += cf;
        if cumulative >= 0.0 {
            if t == 0 {
                return Ok(0.0);
            }
            return finite((t - 1) as f64 + before.abs() / cf, "payback period");
        }
    }
    Err(CalcError::new(
        Status::NeverRecovered,
        format!("cumulative net cash flow is still {cumulative} after the last period"),
    ))
}

/// Annual profit over total investment, as a fraction.
pub fn ipr(annual_profit: f64, total_investment: f64) -> CalcResult {
    if total_investment == 0.0 {
        return Err(CalcError::divide_by_zero("total investment is zero"));
    }
    finite(annual_profit / total_investment, "investment profit ratio")
}

fn npv_fn(args: &[Value]) -> CalcResult {
    let ncf = args[0].as_series("NPV")?;
    npv(ncf, DiscountRate::new(args[1].as_num("NPV")?)?)
}

fn irr_fn(args: &[Value]) -> CalcResult {
    irr(args[0].as_series("IRR")?, &IrrConfig::default()).map(|s| s.rate)
}

fn ipt_fn(args: &[Value]) -> CalcResult {
    payback_static(args[0].as_series("IPT")?)
}

fn ipr_fn(args: &[Value]) -> CalcResult {
    ipr(args[0].as_num("IPR")?, args[1].as_num("IPR")?)
}

pub(crate) fn register_functions(table: &mut FunctionTable) -> CalcResult<()> {
    use ArgKind::{Number, Series};
    table.register(FunctionDef::new(
        "NPV",
        &[Series, Number],
        "net present value of a cash-flow field at a discount rate",
        npv_fn,
    ))?;
    table.register(FunctionDef::new(
        "IRR",
        &[Series],
        "internal rate of return of a cash-flow field",
        irr_fn,
    ))?;
    table.register(FunctionDef::new(
        "IPT",
        &[Series],
        "static payback period in years",
        ipt_fn,
    ))?;
    table.register(FunctionDef::new(
        "IPR",
        &[Number, Number],
        "annual profit divided by total investment",
        ipr_fn,
    ))
}

fn appointed<'c>(ctx: &'c ExecContext<'_>) -> CalcResult<&'c [f64]> {
    let name = ctx
        .field
        .as_deref()
        .ok_or_else(|| CalcError::new(Status::FieldNotFound, "no field was appointed"))?;
    select_field(ctx.table, name)
}

static FINANCIAL_EVENTS: LazyLock<EventSpace> = LazyLock::new(|| {
    let mut space = EventSpace::new();
    space
        .define_basic("NPV", |ctx| {
            let rate = DiscountRate::new(ctx.binding("rate")?)?;
            ctx.accumulator = npv(appointed(ctx)?, rate)?;
            Ok(())
        })
        .expect("fresh space");
    space
        .define_basic("IRR", |ctx| {
            ctx.accumulator = irr(appointed(ctx)?, &IrrConfig::default())?.rate;
            Ok(())
        })
        .expect("fresh space");
    space
        .define_basic("IPT", |ctx| {
            ctx.accumulator = payback_static(appointed(ctx)?)?;
            Ok(())
        })
        .expect("fresh space");
    space
        .define_basic("IPR", |ctx| {
            ctx.accumulator = ipr(ctx.binding("annual_profit")?, ctx.binding("total_investment")?)?;
            Ok(())
        })
        .expect("fresh space");
    space
});

/// The indicators as basic events. Series come from the appointed field of the
/// context; `NPV` reads binding `rate`, `IPR` reads `annual_profit` and
/// `total_investment`.
pub fn financial_events() -> &'static EventSpace {
    &FINANCIAL_EVENTS
}
