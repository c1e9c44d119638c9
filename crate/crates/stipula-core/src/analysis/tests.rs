use super::*;
use crate::codegen::{render_term, TermStyle};
use crate::syntax::{canonicalize, parse_contract, ContractAst};

fn fixture(name: &str) -> ContractAst {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    let src = std::fs::read_to_string(format!("{path}/{name}.stipula")).unwrap();
    canonicalize(&parse_contract(&src).unwrap())
}

fn show(contract: &str, t: &Term) -> String {
    render_term(
        t,
        &TermStyle { contract, unqualified_contract: false, old_as_plain: false },
    )
}

fn show_pre(contract: &str, t: &Term) -> String {
    render_term(
        t,
        &TermStyle { contract, unqualified_contract: false, old_as_plain: true },
    )
}

#[test]
fn deposit_flour_is_divisible() {
    let assets = classify(&fixture("Deposit")).unwrap();
    assert_eq!(assets.kind("flour"), Some(AssetKind::Divisible));
    let model = assets.model("flour").unwrap();
    assert_eq!(model.owners.len(), 3);
    assert_eq!(model.total.as_deref(), Some("kappa_flour"));
}

#[test]
fn license_assets_are_indivisible() {
    let assets = classify(&fixture("License")).unwrap();
    assert_eq!(assets.kind("token"), Some(AssetKind::Indivisible));
    assert_eq!(assets.kind("balance"), Some(AssetKind::Indivisible));
    // the filling parameters take the asset's kind
    assert_eq!(assets.param("offer", "n").unwrap().kind, AssetKind::Indivisible);
    assert_eq!(assets.param("offer", "n").unwrap().alpha.as_deref(), Some("token"));
    assert_eq!(assets.param("activate", "b").unwrap().alpha.as_deref(), Some("balance"));
}

#[test]
fn contract_without_asset_statements_defaults_indivisible() {
    let src = "stipula C { asset a, b field agreement(A){} => @S @S A : f()[] { } => @T }";
    let models = classify_assets(&canonicalize(&parse_contract(src).unwrap())).unwrap();
    assert!(models.iter().all(|m| m.kind == AssetKind::Indivisible));
}

#[test]
fn unbacked_parameters_are_integer_payments() {
    let assets = classify(&fixture("Loan")).unwrap();
    let w = assets.param("give_money", "w").unwrap();
    assert_eq!(w.kind, AssetKind::Divisible);
    assert_eq!(w.alpha, None);
    let w = assets.param("buy", "w");
    assert!(w.is_none());
    let deposit = classify(&fixture("Deposit")).unwrap();
    assert_eq!(deposit.param("buy", "w").unwrap().alpha, None);
    assert_eq!(deposit.param("send", "h").unwrap().alpha.as_deref(), Some("flour"));
}

#[test]
fn kind_mismatch_across_transfer_is_a_conflict() {
    // `a` moves by amount (divisible), `b` is only drained (indivisible),
    // yet `a` drains whole into `b`
    let src = "stipula C { asset a, b field agreement(A){} => @S \
               @S A : f()[] { (1) -o a, A  a -o b  b -o A } => @T }";
    let err = classify(&canonicalize(&parse_contract(src).unwrap())).unwrap_err();
    match err {
        AnalysisError::Conflict { first, second, .. } => {
            assert_ne!(first, second);
        }
        other => panic!("expected conflict, got {other:?}"),
    }
}

#[test]
fn param_linking_assets_of_both_kinds_is_a_conflict() {
    let src = "stipula C { asset a, b field agreement(A){} => @S \
               @S A : f()[k] { (1) -o a, A  k -o a  k -o b  b -o A } => @T }";
    let err = classify(&canonicalize(&parse_contract(src).unwrap())).unwrap_err();
    assert!(matches!(err, AnalysisError::Conflict { .. }), "{err:?}");
}

#[test]
fn exclusivity_formula_for_license_token() {
    let assets = classify(&fixture("License")).unwrap();
    let model = assets.model("token").unwrap();
    let SpecCondition::Formula(f) = exclusivity_invariant(model).unwrap() else {
        panic!()
    };
    assert_eq!(
        show("License", &f),
        "License.token && !Licensor.token && !Licensee.token \
         || Licensor.token && !License.token && !Licensee.token \
         || Licensee.token && !License.token && !Licensor.token"
    );
}

#[test]
fn exclusivity_for_single_party_contract_has_two_disjuncts() {
    let src = "stipula C { asset a field agreement(P){} => @S @S P : f()[] { a -o P } => @T }";
    let assets = classify(&canonicalize(&parse_contract(src).unwrap())).unwrap();
    let SpecCondition::Formula(f) = exclusivity_invariant(assets.model("a").unwrap()).unwrap()
    else {
        panic!()
    };
    assert_eq!(show("C", &f), "C.a && !P.a || P.a && !C.a");
}

#[test]
fn exclusivity_for_three_parties_has_four_disjuncts() {
    // Property 1 expanded by hand for three parties: four disjuncts, each
    // with three negations.
    let src = "stipula C { asset a field agreement(P, Q, R){} => @S @S P : f()[] { a -o P } => @T }";
    let assets = classify(&canonicalize(&parse_contract(src).unwrap())).unwrap();
    let SpecCondition::Formula(f) = exclusivity_invariant(assets.model("a").unwrap()).unwrap()
    else {
        panic!()
    };
    let text = show("C", &f);
    assert_eq!(text.matches("||").count(), 3);
    assert_eq!(text.matches("!").count(), 12);
    assert!(text.starts_with("C.a && !P.a && !Q.a && !R.a"));
}

#[test]
fn exclusivity_rejects_divisible_assets() {
    let assets = classify(&fixture("Deposit")).unwrap();
    let err = exclusivity_invariant(assets.model("flour").unwrap()).unwrap_err();
    assert!(matches!(err, AnalysisError::Kind(_)));
}

#[test]
fn conservation_formula_for_deposit_flour() {
    let assets = classify(&fixture("Deposit")).unwrap();
    let SpecCondition::Formula(f) = conservation_invariant(assets.model("flour").unwrap()).unwrap()
    else {
        panic!()
    };
    assert_eq!(
        show("Deposit", &f),
        "Deposit.flour + Client.flour + Farm.flour == kappa_flour"
    );
}

#[test]
fn conservation_for_zero_party_contract_is_the_contract_holding() {
    let model = AssetModel {
        asset: "a".into(),
        kind: AssetKind::Divisible,
        owners: vec![Owner::Contract],
        total: Some("kappa_a".into()),
    };
    let SpecCondition::Formula(f) = conservation_invariant(&model).unwrap() else { panic!() };
    assert_eq!(show("C", &f), "C.a == kappa_a");
}

#[test]
fn conservation_for_betting_wallet_has_four_terms() {
    let assets = classify(&fixture("Betting")).unwrap();
    let SpecCondition::Formula(f) =
        conservation_invariant(assets.model("wallet").unwrap()).unwrap()
    else {
        panic!()
    };
    assert_eq!(
        show("Betting", &f),
        "Betting.wallet + Better1.wallet + Better2.wallet + DataProvider.wallet == kappa_wallet"
    );
}

#[test]
fn conservation_rejects_indivisible_assets() {
    let assets = classify(&fixture("License")).unwrap();
    let err = conservation_invariant(assets.model("token").unwrap()).unwrap_err();
    assert!(matches!(err, AnalysisError::Kind(_)));
}

#[test]
fn license_buy_spec_matches_published_contract() {
    let ast = fixture("License");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("buy".into())).unwrap();

    let pre: Vec<String> = spec.pre_formulas().map(|t| show_pre("License", t)).collect();
    assert_eq!(
        pre,
        vec!["License.balance", "License.token", "!Licensor.balance", "!Licensee.token"]
    );

    let post: Vec<(String, String)> = spec
        .post
        .iter()
        .map(|e| (e.loc.qualified("License"), show("License", &e.value)))
        .collect();
    assert_eq!(
        post,
        vec![
            ("Licensor.balance".to_string(), "true".to_string()),
            ("License.balance".to_string(), "false".to_string()),
            ("Licensee.token".to_string(), "true".to_string()),
            ("License.token".to_string(), "false".to_string()),
        ]
    );

    let frame: Vec<String> = spec.frame.iter().map(|l| l.qualified("License")).collect();
    assert_eq!(
        frame,
        vec!["Licensor.balance", "License.balance", "Licensee.token", "License.token"]
    );
}

#[test]
fn deposit_send_spec_matches_published_postcondition() {
    let ast = fixture("Deposit");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("send".into())).unwrap();
    let post: Vec<String> = spec
        .post
        .iter()
        .map(|e| format!("{} == {}", e.loc.qualified("Deposit"), show("Deposit", &e.value)))
        .collect();
    assert_eq!(
        post,
        vec![
            "Deposit.flour == \\old(Deposit.flour) + h",
            "Farm.flour == \\old(Farm.flour) - h",
        ]
    );
}

#[test]
fn empty_body_clause_has_guard_only_pre_and_empty_frame() {
    let src = "stipula C { asset field x agreement(A){A : x} => @S \
               @S A : f()[] (x > 0) { } => @T }";
    let ast = canonicalize(&parse_contract(src).unwrap());
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("f".into())).unwrap();
    let pre: Vec<String> = spec.pre_formulas().map(|t| show_pre("C", t)).collect();
    assert_eq!(pre, vec!["x > 0"]);
    assert!(spec.post.is_empty());
    assert!(spec.frame.is_empty());
}

#[test]
fn event_spec_for_license_trial_timeout() {
    let ast = fixture("License");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Event(2)).unwrap();
    assert!(spec.pre.iter().any(|c| matches!(c, SpecCondition::StateIs(s) if s.as_str() == "Trial")));
    let post: Vec<(String, String)> = spec
        .post
        .iter()
        .map(|e| (e.loc.qualified("License"), show("License", &e.value)))
        .collect();
    assert_eq!(
        post,
        vec![
            ("Licensee.balance".to_string(), "true".to_string()),
            ("License.balance".to_string(), "false".to_string()),
            ("Licensor.token".to_string(), "true".to_string()),
            ("License.token".to_string(), "false".to_string()),
        ]
    );
}

#[test]
fn indivisible_guard_equality_becomes_ownership() {
    let ast = fixture("License");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("activate".into())).unwrap();
    let pre: Vec<String> = spec.pre_formulas().map(|t| show_pre("License", t)).collect();
    // the numeric guard b == cost abstracts into the caller owning the lot
    assert_eq!(pre, vec!["Licensee.balance", "!License.balance"]);
}

#[test]
fn divisible_guard_and_availability_are_kept() {
    let ast = fixture("Deposit");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("buy".into())).unwrap();
    let pre: Vec<String> = spec.pre_formulas().map(|t| show_pre("Deposit", t)).collect();
    assert_eq!(
        pre,
        vec![
            "w/cost_flour <= Deposit.flour",
            "w >= 0",
            "Deposit.flour >= w/cost_flour",
        ]
    );
}

#[test]
fn betting_outcome_spec_uses_conditional_effects() {
    let ast = fixture("Betting");
    let assets = classify(&ast).unwrap();
    let spec = derive_clause_spec(&ast, &assets, ClauseRef::Function("data".into())).unwrap();
    let wallet_effect = spec
        .post
        .iter()
        .find(|e| e.loc == Location::party_asset("Better1", "wallet"))
        .expect("Better1.wallet effect");
    let text = show("Betting", &wallet_effect.value);
    assert!(text.contains("r == \\old(p1) ?"), "{text}");
}
