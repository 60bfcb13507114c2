use std::collections::BTreeSet;
use std::sync::Arc;

use advisor_core::recommend::{ReasonRole, SpotNames};
use advisor_core::{
    match_set, recommend, unmatch_set, AttributeSchema, AttributeVector, Branch, TriValue,
};
use proptest::prelude::*;

fn mini(ids: &[&str]) -> Arc<AttributeSchema> {
    let full = AttributeSchema::default_schema();
    Arc::new(AttributeSchema::new(ids.iter().map(|id| full.get(id).unwrap().clone()).collect()).unwrap())
}

/// Every vector over `schema`, by base-3 enumeration.
fn all_vectors(schema: &Arc<AttributeSchema>) -> Vec<AttributeVector> {
    let n = schema.len() as u32;
    (0..3usize.pow(n))
        .map(|mut code| {
            let values = (0..n)
                .map(|_| {
                    let v = TriValue::ALL[code % 3];
                    code /= 3;
                    v
                })
                .collect();
            AttributeVector::from_values(schema, values).unwrap()
        })
        .collect()
}

const NAMES: SpotNames<'static> = SpotNames {
    agency_id: "agency",
    agency_name: "Agency Spot",
    other_name: "Other Spot",
};

/// Direct coding of the three branch conditions on raw values.
fn oracle_branch(r: &[TriValue], u: &[TriValue]) -> Branch {
    let m = r.iter().zip(u).filter(|(a, b)| **a == TriValue::Yes && **b == TriValue::Yes).count();
    let ur = r.iter().zip(u).filter(|(a, b)| **a == TriValue::Yes && **b == TriValue::No).count();
    if m == 0 && ur == 0 {
        Branch::Unknown
    } else if m >= ur {
        Branch::MatchDominant
    } else {
        Branch::MismatchDominant
    }
}

#[test]
fn sets_match_brute_force_over_four_attributes() {
    let s = mini(&["park", "free_admission", "children", "spring"]);
    let all = all_vectors(&s);
    assert_eq!(all.len(), 81);
    for spot in &all {
        for user in &all {
            let mut m = BTreeSet::new();
            let mut u = BTreeSet::new();
            for id in s.ids() {
                match (spot.get(id).unwrap(), user.get(id).unwrap()) {
                    (TriValue::Yes, TriValue::Yes) => {
                        m.insert(id.to_string());
                    }
                    (TriValue::Yes, TriValue::No) => {
                        u.insert(id.to_string());
                    }
                    _ => {}
                }
            }
            assert_eq!(match_set(spot, user).unwrap(), m);
            assert_eq!(unmatch_set(spot, user).unwrap(), u);
        }
    }
}

#[test]
fn exhaustive_branch_equivalence_and_invariants() {
    let s = mini(&["children", "free_admission", "spring"]);
    let all = all_vectors(&s);
    let mut checked = 0;
    for v_r in &all {
        for v_n in &all {
            for v_u in &all {
                let r = recommend(v_r, v_n, v_u, &s, NAMES).unwrap();
                assert_eq!(r.branch, oracle_branch(v_r.values(), v_u.values()));
                assert_eq!(r.recommended_spot_id, "agency");
                assert!(r.m_set.is_disjoint(&r.u_r_set));
                if r.branch == Branch::Unknown {
                    assert!(r.m_set.is_empty() && r.u_r_set.is_empty());
                }
                let general: BTreeSet<String> = v_r.ids_with(TriValue::Yes).into_iter().collect();
                for (role, id) in &r.reasons {
                    let ok = match role {
                        ReasonRole::Match => r.m_set.contains(id),
                        ReasonRole::AgencyMismatch => r.u_r_set.contains(id),
                        ReasonRole::OtherMismatch => r.u_n_set.contains(id),
                        ReasonRole::General => r.branch == Branch::Unknown && general.contains(id),
                    };
                    assert!(ok, "{role:?} {id} not justified");
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 19_683);
}

proptest! {
    #[test]
    fn permuting_schema_changes_only_message_order(
        perm in Just((0..16usize).collect::<Vec<_>>()).prop_shuffle(),
        r in proptest::collection::vec(0..3usize, 16),
        n in proptest::collection::vec(0..3usize, 16),
        u in proptest::collection::vec(0..3usize, 16),
    ) {
        let base = Arc::new(AttributeSchema::default_schema());
        let permuted = Arc::new(
            AttributeSchema::new(perm.iter().map(|&i| base.attributes()[i].clone()).collect()).unwrap(),
        );
        let build = |schema: &Arc<AttributeSchema>, codes: &[usize], order: Option<&[usize]>| {
            let values = match order {
                None => codes.iter().map(|&c| TriValue::ALL[c]).collect(),
                Some(p) => p.iter().map(|&i| TriValue::ALL[codes[i]]).collect(),
            };
            AttributeVector::from_values(schema, values).unwrap()
        };
        let a = recommend(&build(&base, &r, None), &build(&base, &n, None), &build(&base, &u, None), &base, NAMES).unwrap();
        let b = recommend(
            &build(&permuted, &r, Some(&perm)),
            &build(&permuted, &n, Some(&perm)),
            &build(&permuted, &u, Some(&perm)),
            &permuted,
            NAMES,
        )
        .unwrap();
        prop_assert_eq!(a.branch, b.branch);
        prop_assert_eq!(&a.m_set, &b.m_set);
        prop_assert_eq!(&a.u_r_set, &b.u_r_set);
        prop_assert_eq!(&a.u_n_set, &b.u_n_set);
        let sorted = |r: &advisor_core::RecommendationResult| {
            let mut v: Vec<_> = r.reasons.iter().map(|(role, id)| (format!("{role:?}"), id.clone())).collect();
            v.sort();
            v
        };
        prop_assert_eq!(sorted(&a), sorted(&b));
    }
}
