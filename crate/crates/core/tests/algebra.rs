mod common;

use common::oracle::{self, Outcome};
use common::strategies::*;
use proptest::prelude::*;
use riskgrid::dsl::parse_expr;
use riskgrid::dsl::RiskEffect;
use riskgrid::eval::rank_and_filter;
use riskgrid::{
    eval_expr, evaluate_rules, parse_rule, serialize_rule, Binding, EvalMode, Relevance, Rule,
    RuleExpr, ScaleLevel,
};

fn level_of(expr: &RuleExpr, binding: &Binding) -> ScaleLevel {
    eval_expr(expr, binding, EvalMode::Strict)
        .unwrap()
        .level()
        .expect("fully bound")
}

fn to_outcome(r: Relevance) -> Outcome {
    match r {
        Relevance::Level(l) => Outcome::Value(l.numeric() as i32),
        Relevance::Indeterminate(m) => Outcome::Unknown(m),
    }
}

#[test]
fn quartet() {
    let b = Binding::new()
        .with("factor1", ScaleLevel::High)
        .with("factor2", ScaleLevel::Low);
    let got: Vec<_> = [
        "factor1",
        "!factor1",
        "factor1 & factor2",
        "factor1 | factor2",
    ]
    .iter()
    .map(|t| level_of(&parse_expr(t).unwrap(), &b))
    .collect();
    assert_eq!(
        got,
        [
            ScaleLevel::High,
            ScaleLevel::Low,
            ScaleLevel::Low,
            ScaleLevel::High
        ]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_parse_round_trip(e in expr()) {
        prop_assert!(e.depth() <= 6);
        let text = e.to_string();
        prop_assert_eq!(parse_expr(&text).unwrap(), e.clone());
        let rule = Rule::new(7, e, vec![RiskEffect::increases("r"), RiskEffect::decreases_all()]);
        let line = serialize_rule(&rule);
        prop_assert_eq!(serialize_rule(&parse_rule(&line).unwrap()), line);
    }

    #[test]
    fn precedence_matches_oracle(text in expr_text(), b in full_binding()) {
        let ours = parse_expr(&text).unwrap();
        let theirs = oracle::parse(&text).unwrap();
        prop_assert_eq!(oracle::shape_of(&ours), oracle::shape(&theirs), "{}", text);
        prop_assert_eq!(
            to_outcome(eval_expr(&ours, &b, EvalMode::Strict).unwrap()),
            oracle::eval(&theirs, &oracle::env_of(&b), false)
        );
    }

    #[test]
    fn eval_matches_oracle(e in expr(), b in partial_binding()) {
        let node = oracle::from_expr(&e);
        let env = oracle::env_of(&b);
        prop_assert_eq!(to_outcome(eval_expr(&e, &b, EvalMode::Strict).unwrap()), oracle::eval(&node, &env, false));
        prop_assert_eq!(to_outcome(eval_expr(&e, &b, EvalMode::AssumeNominal).unwrap()), oracle::eval(&node, &env, true));
    }

    #[test]
    fn involution(e in expr(), b in full_binding()) {
        let twice = RuleExpr::not(RuleExpr::not(e.clone()));
        prop_assert_eq!(level_of(&twice, &b), level_of(&e, &b));
    }

    #[test]
    fn de_morgan(a in expr(), c in expr(), b in full_binding()) {
        let not_and = RuleExpr::not(RuleExpr::and([a.clone(), c.clone()]));
        let or_not = RuleExpr::or([RuleExpr::not(a.clone()), RuleExpr::not(c.clone())]);
        prop_assert_eq!(level_of(&not_and, &b), level_of(&or_not, &b));
        let not_or = RuleExpr::not(RuleExpr::or([a.clone(), c.clone()]));
        let and_not = RuleExpr::and([RuleExpr::not(a), RuleExpr::not(c)]);
        prop_assert_eq!(level_of(&not_or, &b), level_of(&and_not, &b));
    }

    #[test]
    fn commutative_associative_idempotent(x in expr(), y in expr(), z in expr(), b in full_binding()) {
        type Op = fn(Vec<RuleExpr>) -> RuleExpr;
        for op in [RuleExpr::And as Op, RuleExpr::Or as Op] {
            prop_assert_eq!(
                level_of(&op(vec![x.clone(), y.clone()]), &b),
                level_of(&op(vec![y.clone(), x.clone()]), &b)
            );
            prop_assert_eq!(
                level_of(&op(vec![op(vec![x.clone(), y.clone()]), z.clone()]), &b),
                level_of(&op(vec![x.clone(), op(vec![y.clone(), z.clone()])]), &b)
            );
            prop_assert_eq!(level_of(&op(vec![x.clone(), x.clone()]), &b), level_of(&x, &b));
        }
    }

    #[test]
    fn monotone_without_negation(e in positive_expr(), b in full_binding(), which in 0..ORDINALS.len(), up in level()) {
        let factor = ORDINALS[which];
        let current = match b.get(factor) {
            Some(riskgrid::FactorValue::Level(l)) => *l,
            _ => unreachable!(),
        };
        let raised = b.clone().with(factor, current.max(up));
        prop_assert!(level_of(&e, &raised) >= level_of(&e, &b));
    }

    #[test]
    fn threshold_contract(exprs in prop::collection::vec(expr(), 1..8), b in partial_binding(), t in level(), nominal in any::<bool>()) {
        let rulebase = synthetic_rulebase(&exprs);
        let mode = if nominal { EvalMode::AssumeNominal } else { EvalMode::Strict };
        let ranking = rank_and_filter(&evaluate_rules(&rulebase, &b, mode).unwrap(), t);
        let got: Vec<(u32, i32)> = ranking
            .ranked
            .iter()
            .map(|r| (r.rule_id, r.relevance.level().unwrap().numeric() as i32))
            .collect();
        let rules: Vec<(u32, oracle::Node)> = exprs.iter().enumerate().map(|(i, e)| (i as u32 + 1, oracle::from_expr(e))).collect();
        let env = oracle::env_of(&b);
        prop_assert_eq!(got, oracle::presented(&rules, &env, t.numeric() as i32, nominal));
        for r in &ranking.indeterminate {
            prop_assert!(matches!(oracle::eval(&rules[r.rule_id as usize - 1].1, &env, nominal), Outcome::Unknown(_)));
        }
    }
}
