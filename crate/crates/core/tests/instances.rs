use std::collections::BTreeSet;

use crlab::families::closed_form_size;
use crlab::setcover::{brute_force_setcover, enumerate_instances, greedy_setcover, reduce_setcover};
use crlab::{build_family, FamilyKind, SetCoverInstance, Vertex};

#[test]
fn family_sizes_match_closed_forms() {
    for kind in FamilyKind::all() {
        for k in 2..=9 {
            let (g, _) = build_family(kind, k).unwrap();
            assert_eq!((g.vertex_count(), g.edge_count()), closed_form_size(kind, k), "{kind} k={k}");
        }
    }
}

#[test]
fn role_map_is_well_formed() {
    for kind in FamilyKind::all() {
        let (g, d) = build_family(kind, 5).unwrap();
        let text = d.roles_text();
        let mut seen = BTreeSet::new();
        for line in text.lines() {
            let mut fields = line.split_whitespace();
            assert_eq!(fields.next(), Some("role"), "{kind}: {line}");
            let name = fields.next().unwrap();
            assert!(d.roles.contains_key(name));
            for id in fields {
                let v: Vertex = id.parse().unwrap();
                assert!((v as usize) < g.vertex_count());
                seen.insert(v);
            }
        }
        for layer in [&d.x, &d.y] {
            assert!(layer.iter().all(|v| seen.contains(v)), "{kind}: layer vertex without a role");
        }
    }
}

#[test]
fn family_names_parse_back() {
    for kind in FamilyKind::all() {
        assert_eq!(kind.to_string().parse::<FamilyKind>().unwrap(), kind);
    }
    assert!("wheel".parse::<FamilyKind>().is_err());
}

#[test]
fn setcover_text_round_trips_and_reduces() {
    let text = "u 1 2 3 4\ns 1 2\ns 3\ns 2 3 4\n";
    let inst = SetCoverInstance::parse(text).unwrap();
    assert_eq!(SetCoverInstance::parse(&inst.to_text()).unwrap(), inst);
    let r = reduce_setcover(&inst, 5).unwrap();
    assert_eq!(r.graph.vertex_count(), 4 + 5 + 3);
    assert_eq!(r.x().len(), 4 + 5);
    assert!(SetCoverInstance::parse("u 1 2\ns 1\n").is_err());
}

#[test]
fn greedy_is_a_cover_and_at_least_optimal() {
    for inst in enumerate_instances(4, 4) {
        let greedy = greedy_setcover(&inst);
        let covered: BTreeSet<&String> = greedy.iter().flat_map(|&i| &inst.subsets[i]).collect();
        assert_eq!(covered.len(), inst.universe.len());
        assert!(greedy.len() >= brute_force_setcover(&inst).unwrap());
    }
}
