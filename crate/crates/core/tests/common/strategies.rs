use proptest::prelude::*;
use riskgrid::{parse_rulebase, Binding, FactorValue, RuleExpr, Rulebase, ScaleLevel};

pub const ORDINALS: [&str; 5] = ["f0", "f1", "f2", "f3", "f4"];
pub const PHASE: &str = "phase";
pub const PHASES: [&str; 3] = ["alpha", "beta", "gamma"];

pub fn level() -> impl Strategy<Value = ScaleLevel> {
    prop::sample::select(ScaleLevel::ALL.to_vec())
}

fn ordinal_leaf(pool: &'static [&'static str]) -> BoxedStrategy<RuleExpr> {
    prop::sample::select(pool.to_vec())
        .prop_map(RuleExpr::factor)
        .boxed()
}

fn leaf() -> BoxedStrategy<RuleExpr> {
    prop_oneof![
        4 => ordinal_leaf(&ORDINALS),
        1 => prop::sample::select(PHASES.to_vec()).prop_map(|v| RuleExpr::enum_is(PHASE, v)),
    ]
    .boxed()
}

/// Well-formed expressions of depth at most 6. Nested same-operator groups
/// are generated on purpose.
pub fn expr() -> BoxedStrategy<RuleExpr> {
    leaf()
        .prop_recursive(5, 48, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(RuleExpr::not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(RuleExpr::And),
                prop::collection::vec(inner, 2..4).prop_map(RuleExpr::Or),
            ]
        })
        .boxed()
}

/// Negation-free, ordinal-only expressions.
pub fn positive_expr() -> BoxedStrategy<RuleExpr> {
    ordinal_leaf(&ORDINALS)
        .prop_recursive(5, 48, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(RuleExpr::And),
                prop::collection::vec(inner, 2..4).prop_map(RuleExpr::Or),
            ]
        })
        .boxed()
}

/// Every factor bound.
pub fn full_binding() -> impl Strategy<Value = Binding> {
    (
        prop::collection::vec(level(), ORDINALS.len()),
        prop::sample::select(PHASES.to_vec()),
    )
        .prop_map(|(levels, phase)| {
            let mut b: Binding = ORDINALS
                .iter()
                .zip(levels)
                .map(|(f, l)| (f.to_string(), FactorValue::Level(l)))
                .collect();
            b.insert(PHASE, FactorValue::Enum(phase.to_string()));
            b
        })
}

/// Each factor independently bound or absent.
pub fn partial_binding() -> impl Strategy<Value = Binding> {
    (
        prop::collection::vec(prop::option::of(level()), ORDINALS.len()),
        prop::option::of(prop::sample::select(PHASES.to_vec())),
    )
        .prop_map(|(levels, phase)| {
            let mut b = Binding::new();
            for (f, l) in ORDINALS.iter().zip(levels) {
                if let Some(l) = l {
                    b.insert(*f, l);
                }
            }
            if let Some(p) = phase {
                b.insert(PHASE, FactorValue::Enum(p.to_string()));
            }
            b
        })
}

/// Loosely bracketed expression text that leans on operator precedence.
pub fn expr_text() -> BoxedStrategy<String> {
    let atom = prop_oneof![
        4 => prop::sample::select(ORDINALS.to_vec()).prop_map(str::to_string),
        1 => prop::sample::select(PHASES.to_vec()).prop_map(|v| format!("{PHASE} = {v}")),
    ];
    atom.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| format!("!{e}")),
            inner.clone().prop_map(|e| format!("({e})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} & {b}")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("{a}|{b}")),
        ]
    })
    .boxed()
}

pub fn catalog_header() -> String {
    let mut doc = String::new();
    for f in ORDINALS {
        doc.push_str(&format!(
            "factor {f} scope=task kind=ordinal name=\"{f}\"\n"
        ));
    }
    doc.push_str(&format!(
        "factor {PHASE} scope=task kind=enum({}) name=\"Phase\"\n",
        PHASES.join(",")
    ));
    doc.push_str("risk r name=\"R\"\n");
    doc
}

/// Rulebase over the synthetic catalog with rule ids 1..=n.
pub fn synthetic_rulebase(exprs: &[RuleExpr]) -> Rulebase {
    let mut doc = catalog_header();
    for (i, e) in exprs.iter().enumerate() {
        doc.push_str(&format!("rule {}: {e} -> + r desc=\"synthetic\"\n", i + 1));
    }
    parse_rulebase(&doc).expect("synthetic rulebase parses")
}

const KB_FACTORS: [&str; 6] = [
    "time_zone_difference",
    "cultural_difference",
    "staff_motivation",
    "time_pressure",
    "process_maturity",
    "no_such_factor",
];
const KB_RISKS: [&str; 4] = [
    "quality_problems",
    "lack_of_trust",
    "cost_overhead",
    "no_such_risk",
];

fn kb_rule_text() -> impl Strategy<Value = String> {
    (
        prop::sample::select(KB_FACTORS.to_vec()),
        prop::sample::select(KB_FACTORS.to_vec()),
        any::<bool>(),
        any::<bool>(),
        prop::sample::select(KB_RISKS.to_vec()),
    )
        .prop_map(|(a, b, neg, and, risk)| {
            let op = if and { "&" } else { "|" };
            let bang = if neg { "!" } else { "" };
            format!("{a} {op} {bang}{b} -> + {risk}")
        })
}

/// Update requests against the seeded knowledge base, some of them invalid.
pub fn kb_request() -> BoxedStrategy<riskgrid::kb::ChangeRequest> {
    use riskgrid::kb::ChangeRequest;
    let rule_id = 1u32..42;
    prop_oneof![
        4 => rule_id.clone().prop_map(|rule_id| ChangeRequest::Confirm { rule_id }),
        4 => rule_id.clone().prop_map(|rule_id| ChangeRequest::Refute { rule_id }),
        2 => (rule_id.clone(), kb_rule_text(), prop::option::of("[a-z ]{1,12}")).prop_map(|(rule_id, rule, description)| {
            ChangeRequest::Modify { rule_id, rule, description }
        }),
        2 => (kb_rule_text(), "[a-z ]{0,12}").prop_map(|(rule, description)| ChangeRequest::AddRule {
            rule,
            description,
            provenance: String::new(),
        }),
        1 => rule_id.prop_map(|rule_id| ChangeRequest::RetireRule { rule_id }),
        1 => ("[a-z]{1,6}", prop::sample::select(riskgrid::Scope::ALL.to_vec())).prop_map(|(id, scope)| {
            ChangeRequest::AddFactor {
                factor: riskgrid::FactorDef {
                    name: id.clone(),
                    id: format!("x_{id}"),
                    scope,
                    kind: riskgrid::FactorKind::Ordinal,
                },
            }
        }),
    ]
    .boxed()
}

/// Ordinal expressions, with negation, over the given factors only.
pub fn expr_over(factors: &'static [&'static str]) -> BoxedStrategy<RuleExpr> {
    ordinal_leaf(factors)
        .prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(RuleExpr::not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(RuleExpr::And),
                prop::collection::vec(inner, 2..4).prop_map(RuleExpr::Or),
            ]
        })
        .boxed()
}
