//! Property-based tests: algebraic invariants of the model, estimator
//! invariances, round-trips, and agreement with the independent reference
//! implementations in `support`.

mod support;

use circex_core::baselines::{
    institutional_social_cost, neoclassical_social_cost, price_alignment_diagnosis,
    recycling_optimality_gap,
};
use circex_core::compare::{build_frame, laggard_report, ratio_matrix, trend_summary};
use circex_core::registry::{
    parse_registry_tables, serialize_registry_tables, validate_annual_totals, AnnualAggregate,
    CostCategory, CostLedger, IndicatorPoint, IndicatorSeries, IndicatorUnit, LedgerEntry,
    OrganizationRecord, RouteAllocation, RouteKind,
};
use circex_core::spc::{balance, compute_spc, compute_trc, SpcInputs, UnitBridge};
use circex_core::stats::{fisher_interval, kendall_tau, pearson, spearman_rho, Series};
use proptest::prelude::*;
use support::{kendall_oracle, pearson_oracle, spearman_oracle};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Tonnage quoted at three decimals, like the source tables.
fn tons() -> impl Strategy<Value = f64> {
    (1u32..20_000_000u32).prop_map(|millis| millis as f64 / 1000.0)
}

fn org_name() -> impl Strategy<Value = String> {
    "[A-Z][a-z]{2,10}( [A-Z][a-z]{1,6})?".prop_filter("reserved", |s| s.as_str() != "TOTAL")
}

prop_compose! {
    fn organization()(
        name in org_name(),
        regenerated in tons(),
        // The table contract demands regenerated <= released per row.
        extra_released in tons(),
        route_fraction in 0.0f64..=1.0,
        with_route in any::<bool>(),
        recovery in any::<bool>(),
    ) -> OrganizationRecord {
        let released = regenerated + extra_released;
        let routes = if with_route {
            // Keep the regeneration route sum at or below the regenerated
            // total, as the table contract demands.
            let tons = (regenerated * route_fraction * 1000.0).floor() / 1000.0;
            vec![RouteAllocation {
                processor: "Proc X".to_string(),
                tons,
                kind: if recovery { RouteKind::RecoveryOnly } else { RouteKind::Regeneration },
            }]
        } else {
            Vec::new()
        };
        OrganizationRecord { name, released_tons: released, regenerated_tons: regenerated, routes }
    }
}

prop_compose! {
    fn aggregate(year: u16)(
        mut organizations in prop::collection::vec(organization(), 1..6),
    ) -> AnnualAggregate {
        // Organization names must be unique within the year.
        for (i, org) in organizations.iter_mut().enumerate() {
            org.name = format!("{} {i}", org.name);
        }
        // Declared totals reproduce the parser's accumulation order exactly.
        let total_released: f64 = organizations.iter().map(|o| o.released_tons).sum();
        let total_regenerated: f64 = organizations.iter().map(|o| o.regenerated_tons).sum();
        AnnualAggregate {
            year,
            organizations,
            total_released_tons: total_released,
            total_regenerated_tons: total_regenerated,
        }
    }
}

fn aggregates() -> impl Strategy<Value = Vec<AnnualAggregate>> {
    prop::collection::vec(any::<bool>(), 1..4).prop_flat_map(|flags| {
        let strategies: Vec<_> = flags
            .iter()
            .enumerate()
            .map(|(i, _)| aggregate(2015 + i as u16))
            .collect();
        strategies
    })
}

/// A vector of observations with enough distinct values to correlate.
fn observations() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        ((-1000i32..1000), (-1000i32..1000)),
        3..16,
    )
    .prop_map(|pairs| {
        pairs
            .into_iter()
            .map(|(x, y)| (x as f64 / 8.0, y as f64 / 8.0))
            .collect::<Vec<(f64, f64)>>()
    })
    .prop_filter("needs non-constant axes", |pairs| {
        let distinct = |get: fn(&(f64, f64)) -> f64| {
            let first = get(&pairs[0]);
            pairs.iter().any(|p| get(p) != first)
        };
        distinct(|p| p.0) && distinct(|p| p.1)
    })
}

fn ledger_amounts() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec(
        ((0usize..7), (0u32..10_000_000u32).prop_map(|c| c as f64 / 100.0)),
        1..30,
    )
}

fn make_ledger(year: u16, postings: &[(usize, f64)]) -> CostLedger {
    CostLedger {
        year,
        entries: postings
            .iter()
            .map(|&(slot, amount)| LedgerEntry {
                category: CostCategory::ALL[slot],
                amount,
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Registry round-trip and totals validation
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn registry_serialization_round_trips(aggs in aggregates()) {
        let text = serialize_registry_tables(&aggs);
        let reparsed = parse_registry_tables(text.as_bytes()).unwrap();
        prop_assert_eq!(&reparsed, &aggs);
        // And the round-trip is a fixed point of serialization too.
        prop_assert_eq!(serialize_registry_tables(&reparsed), text);
    }

    #[test]
    fn perturbed_totals_fail_validation(
        aggs in aggregates(),
        bump in 0.002f64..50.0,
        released_side in any::<bool>(),
    ) {
        let mut agg = aggs[0].clone();
        prop_assert!(validate_annual_totals(&agg, 0.001).is_ok());
        if released_side {
            agg.total_released_tons += bump;
        } else {
            agg.total_regenerated_tons -= bump;
        }
        prop_assert!(validate_annual_totals(&agg, 0.001).is_err());
    }
}

// ---------------------------------------------------------------------------
// Correlation invariances and oracle agreement
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn coefficients_stay_in_unit_interval(pairs in observations()) {
        let series = Series::from_pairs("prop", pairs);
        for report in [
            pearson(&series).unwrap(),
            kendall_tau(&series).unwrap(),
            spearman_rho(&series).unwrap(),
        ] {
            prop_assert!((-1.0..=1.0).contains(&report.coefficient),
                "{:?} out of range: {}", report.method, report.coefficient);
        }
    }

    #[test]
    fn pearson_is_affine_invariant(
        pairs in observations(),
        a in 0.25f64..16.0,
        b in -500.0f64..500.0,
    ) {
        let base = Series::from_pairs("base", pairs.clone());
        let r = pearson(&base).unwrap().coefficient;

        let scaled = Series::from_pairs(
            "scaled",
            pairs.iter().map(|&(x, y)| (a * x + b, y)).collect(),
        );
        let r_scaled = pearson(&scaled).unwrap().coefficient;
        prop_assert!((r - r_scaled).abs() <= 1e-9, "{r} vs {r_scaled}");

        let flipped = Series::from_pairs(
            "flipped",
            pairs.iter().map(|&(x, y)| (-a * x + b, y)).collect(),
        );
        let r_flipped = pearson(&flipped).unwrap().coefficient;
        prop_assert!((r + r_flipped).abs() <= 1e-9, "{r} vs {r_flipped}");
    }

    #[test]
    fn rank_estimators_ignore_monotone_transforms(pairs in observations()) {
        let base = Series::from_pairs("base", pairs.clone());
        // Strictly increasing transform of x: exp(x / 200) keeps order and
        // stays finite for the generated range.
        let warped = Series::from_pairs(
            "warped",
            pairs.iter().map(|&(x, y)| ((x / 200.0).exp(), y)).collect(),
        );
        let tau = kendall_tau(&base).unwrap().coefficient;
        let tau_warped = kendall_tau(&warped).unwrap().coefficient;
        prop_assert_eq!(tau, tau_warped);

        let rho = spearman_rho(&base).unwrap().coefficient;
        let rho_warped = spearman_rho(&warped).unwrap().coefficient;
        prop_assert!((rho - rho_warped).abs() <= 1e-12, "{} vs {}", rho, rho_warped);
    }

    #[test]
    fn rank_estimators_negate_under_reversal(pairs in observations()) {
        let base = Series::from_pairs("base", pairs.clone());
        let reversed = Series::from_pairs(
            "reversed",
            pairs.iter().map(|&(x, y)| (-x, y)).collect(),
        );
        let tau = kendall_tau(&base).unwrap().coefficient;
        let tau_reversed = kendall_tau(&reversed).unwrap().coefficient;
        prop_assert_eq!(tau, -tau_reversed);

        let rho = spearman_rho(&base).unwrap().coefficient;
        let rho_reversed = spearman_rho(&reversed).unwrap().coefficient;
        prop_assert!((rho + rho_reversed).abs() <= 1e-12, "{} vs {}", rho, rho_reversed);
    }

    #[test]
    fn estimators_agree_with_reference_implementations(pairs in observations()) {
        let series = Series::from_pairs("prop", pairs.clone());
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();

        let tau = kendall_tau(&series).unwrap().coefficient;
        prop_assert_eq!(tau, kendall_oracle(&xs, &ys));

        let rho = spearman_rho(&series).unwrap().coefficient;
        let rho_ref = spearman_oracle(&xs, &ys);
        prop_assert!((rho - rho_ref).abs() <= 1e-12, "{} vs {}", rho, rho_ref);

        // The raw-moment reference loses precision to cancellation on
        // near-constant axes (which the generator's edge-case bias can
        // produce), so the bound is looser than for the rank estimators.
        let r = pearson(&series).unwrap().coefficient;
        let r_ref = pearson_oracle(&xs, &ys);
        prop_assert!((r - r_ref).abs() <= 1e-9, "{} vs {}", r, r_ref);
    }

    #[test]
    fn fisher_interval_contains_r_and_tightens(
        r_mill in -999i32..=999,
        n_small in 5usize..20,
        extra in 10usize..200,
    ) {
        let r = r_mill as f64 / 1000.0;
        let narrow = fisher_interval(r, n_small, 0.95).unwrap();
        prop_assert!(narrow.lower <= r && r <= narrow.upper);
        let wide_n = fisher_interval(r, n_small + extra, 0.95).unwrap();
        let width_small = narrow.upper - narrow.lower;
        let width_large = wide_n.upper - wide_n.lower;
        prop_assert!(width_large < width_small,
            "width did not shrink: n={} gives {width_small}, n={} gives {width_large}",
            n_small, n_small + extra);
    }
}

// ---------------------------------------------------------------------------
// Model invariants: SPC, TrC, balance
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn spc_identities(
        regenerated in 0.0f64..200_000.0,
        capacity in 1.0f64..300_000.0,
        demand in 1.0f64..300_000.0,
    ) {
        let result = compute_spc(&SpcInputs {
            year: 2016,
            released_tons: 0.0,
            regenerated_with_systems_tons: regenerated,
            capacity_baseline_tons: capacity,
            demand_baseline_tons: demand,
        }).unwrap();
        prop_assert_eq!(result.spc_capacity, regenerated - capacity);
        prop_assert_eq!(result.spc_demand, regenerated - demand);
        prop_assert_eq!(
            result.spc_average,
            (result.spc_capacity + result.spc_demand) / 2.0
        );
        prop_assert_eq!(result.magnitude, result.spc_average.abs());
    }

    #[test]
    fn trc_partition_is_exact_and_order_free(postings in ledger_amounts()) {
        let trc = compute_trc(&make_ledger(2016, &postings));
        prop_assert_eq!(trc.fixed, trc.administrative + trc.market);
        prop_assert_eq!(trc.variable, trc.performance + trc.alternative);
        prop_assert_eq!(trc.total, trc.fixed + trc.variable);

        // Reversing the posting order only reorders the per-category sums,
        // which changes nothing beyond float addition order.
        let mut reversed = postings.clone();
        reversed.reverse();
        let trc_reversed = compute_trc(&make_ledger(2016, &reversed));
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        prop_assert!(rel(trc.total, trc_reversed.total));
        prop_assert!(rel(trc.fixed, trc_reversed.fixed));
        prop_assert!(rel(trc.variable, trc_reversed.variable));
    }

    #[test]
    fn splitting_a_posting_preserves_totals(
        postings in ledger_amounts(),
        split_at in 0.1f64..0.9,
    ) {
        let whole = compute_trc(&make_ledger(2016, &postings));
        let mut split = Vec::new();
        for &(slot, amount) in &postings {
            split.push((slot, amount * split_at));
            split.push((slot, amount * (1.0 - split_at)));
        }
        let halves = compute_trc(&make_ledger(2016, &split));
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        prop_assert!(rel(whole.total, halves.total));
        prop_assert!(rel(whole.administrative, halves.administrative));
        prop_assert!(rel(whole.market, halves.market));
        prop_assert!(rel(whole.performance, halves.performance));
        prop_assert!(rel(whole.alternative, halves.alternative));
    }

    #[test]
    fn balance_log_residual_inverts_to_ratio(
        magnitude in 0.001f64..1e6,
        total in 0.001f64..1e6,
        rate in 0.01f64..100.0,
    ) {
        let spc = circex_core::spc::SpcResult {
            year: 2016,
            spc_capacity: -magnitude,
            spc_demand: -magnitude,
            spc_average: -magnitude,
            magnitude,
        };
        let trc = compute_trc(&make_ledger(2016, &[(5, total)]));
        let report = balance(&spc, &trc, Some(UnitBridge::ConversionRate(rate)), 1e-6).unwrap();
        let ratio = report.ratio.unwrap();
        let residual = report.log_residual.unwrap();
        prop_assert!((residual.exp() - ratio).abs() <= 1e-12 * ratio.abs().max(1.0),
            "exp(ln r) = {} vs r = {}", residual.exp(), ratio);
        prop_assert_eq!(report.holds, Some(residual.abs() <= 1e-6));
    }

    #[test]
    fn balance_at_parity_has_zero_residual(magnitude in 0.001f64..1e6) {
        let spc = circex_core::spc::SpcResult {
            year: 2016,
            spc_capacity: -magnitude,
            spc_demand: -magnitude,
            spc_average: -magnitude,
            magnitude,
        };
        let trc = compute_trc(&make_ledger(2016, &[(6, magnitude)]));
        let report = balance(&spc, &trc, Some(UnitBridge::Dimensionless), 0.0).unwrap();
        // x / x is exactly 1, so the residual is exactly 0 and the
        // hypothesis holds even at zero tolerance.
        prop_assert_eq!(report.ratio, Some(1.0));
        prop_assert_eq!(report.log_residual, Some(0.0));
        prop_assert_eq!(report.holds, Some(true));
    }
}

// ---------------------------------------------------------------------------
// Comparison invariants
// ---------------------------------------------------------------------------

fn indicator_pool(values: &[f64]) -> Vec<IndicatorSeries> {
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| IndicatorSeries {
            dataset: "env_wasgen".to_string(),
            country: format!("C{i:02}"),
            unit: IndicatorUnit::KgPerCapita,
            points: vec![IndicatorPoint { year: 2018, value }],
        })
        .collect()
}

proptest! {
    #[test]
    fn ratio_matrix_reciprocity_and_unit_diagonal(
        values in prop::collection::vec(0.001f64..1e5, 2..12),
    ) {
        let pool = indicator_pool(&values);
        let countries: Vec<String> = pool.iter().map(|s| s.country.clone()).collect();
        let frame = build_frame(&pool, "env_wasgen", &countries, &countries[0]).unwrap();
        let matrix = ratio_matrix(&frame).unwrap();
        let n = matrix.countries.len();
        for i in 0..n {
            prop_assert_eq!(matrix.values[i][i], 1.0);
            for j in 0..n {
                let product = matrix.values[i][j] * matrix.values[j][i];
                prop_assert!((product - 1.0).abs() <= 1e-9, "m[i][j]*m[j][i] = {product}");
            }
        }
    }

    #[test]
    fn laggard_ranking_is_total_and_order_free(
        values in prop::collection::vec(0.001f64..1e5, 2..10),
        seed in any::<u64>(),
    ) {
        let pool = indicator_pool(&values);
        let mut countries: Vec<String> = pool.iter().map(|s| s.country.clone()).collect();
        let reference = countries[0].clone();
        let directions = circex_core::compare::default_directions();

        let frame = build_frame(&pool, "env_wasgen", &countries, &reference).unwrap();
        let baseline = laggard_report(&[frame], &directions).unwrap();

        // Every requested country is ranked exactly once.
        prop_assert_eq!(baseline.rankings[0].entries.len(), countries.len());
        prop_assert_eq!(baseline.composite.len(), countries.len());

        // Shuffle the request order; the report must not change.
        let mut rng = support::SplitMix64::new(seed);
        for i in (1..countries.len()).rev() {
            countries.swap(i, rng.below(i + 1));
        }
        let frame = build_frame(&pool, "env_wasgen", &countries, &reference).unwrap();
        let shuffled = laggard_report(&[frame], &directions).unwrap();
        prop_assert_eq!(baseline, shuffled);
    }

    #[test]
    fn trend_relative_change_is_scale_invariant(
        values in prop::collection::vec(0.001f64..1e5, 2..10),
        scale in 0.001f64..1000.0,
    ) {
        let series = IndicatorSeries {
            dataset: "env_wasgen".to_string(),
            country: "AA".to_string(),
            unit: IndicatorUnit::KgPerCapita,
            points: values
                .iter()
                .enumerate()
                .map(|(i, &value)| IndicatorPoint { year: 2010 + i as u16, value })
                .collect(),
        };
        let scaled = IndicatorSeries {
            points: series
                .points
                .iter()
                .map(|p| IndicatorPoint { year: p.year, value: p.value * scale })
                .collect(),
            ..series.clone()
        };
        let a = trend_summary(&series).unwrap();
        let b = trend_summary(&scaled).unwrap();
        let (ra, rb) = (a.relative_change.unwrap(), b.relative_change.unwrap());
        prop_assert!((ra - rb).abs() <= 1e-12 * ra.abs().max(1.0), "{ra} vs {rb}");
        prop_assert_eq!(a.monotone, b.monotone);
    }
}

// ---------------------------------------------------------------------------
// Baseline identities
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn gap_is_the_exact_difference(
        recycling in 0.0f64..1e6,
        virgin in 0.0f64..1e6,
        disposal in 0.0f64..1e6,
    ) {
        let gap = recycling_optimality_gap(recycling, virgin, disposal, 0.0).unwrap();
        prop_assert_eq!(gap.gap, recycling - (virgin + disposal));
    }

    #[test]
    fn social_cost_identities(
        private in -1e6f64..1e6,
        external in -1e6f64..1e6,
    ) {
        let social = neoclassical_social_cost(private, external).unwrap();
        prop_assert_eq!(social, private + external);
        // Recovering the external component from the sum is exact only up
        // to float cancellation.
        let recovered = institutional_social_cost(social, private).unwrap();
        prop_assert!(
            (recovered.value - external).abs() <= 1e-9 * external.abs().max(1.0),
            "{} vs {}", recovered.value, external
        );
    }

    #[test]
    fn price_diagnosis_is_total(
        price in -1e5f64..1e5,
        mpc in -1e5f64..1e5,
        msc in -1e5f64..1e5,
        wtp in -1e5f64..1e5,
    ) {
        // Any finite inputs produce exactly one diagnosis.
        let assessment = price_alignment_diagnosis(price, mpc, msc, wtp).unwrap();
        prop_assert_eq!(assessment.price, price);
    }
}
