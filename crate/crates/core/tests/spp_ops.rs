use acr_core::diffkit::{edit_script, token_edit_distance};
use acr_core::java::{parse_method, parse_untagged, serialize};
use acr_core::lexer::tokenize;
use acr_core::spp::{applicable, apply, PerturbationType as P, Reason};
use acr_core::ReviewInstance;

fn inst(code: &str, comment: &str, revision: &str) -> ReviewInstance {
    ReviewInstance {
        id: "case".into(),
        code: code.into(),
        comment: comment.into(),
        revision: revision.into(),
    }
}

fn toks(s: &str) -> Vec<String> {
    tokenize(s).without_tags().tokens.into_iter().map(|t| t.text).collect()
}

fn canon(s: &str) -> String {
    serialize(&parse_untagged(s).unwrap(), None).unwrap()
}

#[test]
fn if_else_swap_negates_and_swaps() {
    let i = inst(
        "int max(int a, int b) { <START> if (a > b) { return a; } else { return b; } <END> }",
        "simplify",
        "int max(int a, int b) { if (a >= b) { return a; } else { return b; } }",
    );
    let v = apply(P::P1, &i, 3).unwrap();
    assert_eq!(
        toks(&v.code),
        toks("int max(int a, int b) { if (a <= b) { return b; } else { return a; } }")
    );
    assert!(v.code.contains("<START>") && v.code.contains("<END>"));
}

#[test]
fn if_else_swap_twice_is_identity_on_comparisons() {
    let src = "int f(int a) { <START> if (a == 1) { return 2; } else if (!ok()) { g(); } else { h(); } <END> return 0; }";
    let rev = "int f(int a) { if (a == 1) { return 3; } else { h(); } return 0; }";
    let i = inst(src, "c", rev);
    let once = apply(P::P1, &i, 1).unwrap();
    let again = apply(P::P1, &inst(&once.code, "c", rev), 1).unwrap();
    assert_eq!(toks(&again.code), toks(src));
}

#[test]
fn if_else_swap_guards_dangling_else() {
    let src = "void f(int a) { <START> if (a > 0) x(); else if (a < 0) y(); <END> }";
    let i = inst(src, "c", "void f(int a) { if (a > 0) x(); else if (a < -1) y(); }");
    let v = apply(P::P1, &i, 1).unwrap();
    // The swapped then-branch is the else-less inner if, now braced.
    assert_eq!(
        toks(&v.code),
        toks("void f(int a) { if (a <= 0) { if (a < 0) y(); } else x(); }")
    );
    parse_method(&v.code).unwrap();
}

#[test]
fn dead_code_removal_recovers_input() {
    let i = inst(
        "void g() { <START> a(); <END> }",
        "call b too",
        "void g() { a(); b(); }",
    );
    for p in [P::P2, P::P3] {
        let v = apply(p, &i, 9).unwrap();
        let all = tokenize(&v.code);
        let mut kept = Vec::new();
        for (k, t) in all.tokens.iter().enumerate() {
            let inside = v.spans.iter().any(|s| s[0] <= k && k < s[1]);
            if !inside && !t.is_tag() {
                kept.push(t.text.clone());
            }
        }
        assert_eq!(kept, toks(&i.code), "{p}");
    }
}

#[test]
fn try_wrapper_keeps_body() {
    let i = inst(
        "String name(User u) { <START> return u.name; <END> }",
        "check for null",
        "String name(User u) { if (u == null) return null; return u.name; }",
    );
    let v = apply(P::P4, &i, 0).unwrap();
    assert_eq!(
        toks(&v.code),
        toks("String name(User u) { try { return u.name; } catch (Exception e) { throw e; } }")
    );
    assert_eq!(
        toks(&v.revision),
        toks("String name(User u) { try { if (u == null) return null; return u.name; } catch (Exception e) { throw e; } }")
    );
    let wrapped = inst(
        "void f() { <START> try { a(); } catch (Exception e) { b(); } <END> }",
        "c",
        "void f() { a(); }",
    );
    assert_eq!(applicable(P::P4, &wrapped), Err(Reason::AlreadyWrapped));
    let empty = inst("void f() { <START> <END> }", "c", "void f() { a(); }");
    assert_eq!(applicable(P::P4, &empty), Err(Reason::EmptyBody));
}

#[test]
fn line_swap_picks_first_independent_pair() {
    let i = inst(
        "int f() { int a = 1; int b = a; int c = 2; <START> return b + c; <END> }",
        "c",
        "int f() { int a = 1; int b = a; int c = 2; return b * c; }",
    );
    let v = apply(P::P5, &i, 0).unwrap();
    assert_eq!(
        toks(&v.code),
        toks("int f() { int a = 1; int c = 2; int b = a; return b + c; }")
    );
    assert_eq!(
        toks(&v.revision),
        toks("int f() { int a = 1; int c = 2; int b = a; return b * c; }")
    );
    let calls = inst(
        "void f() { int a = g(); int b = h(); <START> use(a, b); <END> }",
        "c",
        "void f() { int a = g(); int b = h(); use(b, a); }",
    );
    assert_eq!(applicable(P::P5, &calls), Err(Reason::NoSwappablePair));
}

#[test]
fn return_via_variable() {
    let i = inst(
        "int f(int x) { if (x > 0) return x; <START> return -x; <END> }",
        "c",
        "int f(int x) { if (x > 0) return x; return 0; }",
    );
    let v = apply(P::P6, &i, 0).unwrap();
    assert_eq!(
        toks(&v.code),
        toks("int f(int x) { if (x > 0) { int retVal = x; return retVal; } int retVal = -x; return retVal; }")
    );
    assert_eq!(applicable(P::P6, &inst("void f() { <START> a(); <END> }", "c", "void f() { b(); }")), Err(Reason::VoidReturn));
}

#[test]
fn def_use_break_copies_and_renames() {
    let i = inst(
        "void f() { <START> int x = g(); <END> use(x); }",
        "c",
        "void f() { int x = g(); use(x + 1); }",
    );
    let v = apply(P::P7, &i, 5).unwrap();
    let t = toks(&v.code);
    let fresh = &t[t.iter().position(|s| s == "=").unwrap() + 6];
    assert_eq!(fresh.len(), 5);
    let expected = format!("void f() {{ int x = g(); int {fresh} = x; use({fresh}); }}");
    assert_eq!(t, toks(&expected));
    assert!(v.revision.contains(&format!("use({fresh} + 1)")));
    // The span grows to include the copy.
    let end = v.code.find("<END>").unwrap();
    assert!(v.code[..end].contains(&format!("{fresh} = x;")));
}

#[test]
fn naming_operators_rewrite_the_comment() {
    let i = inst(
        "int f() { int total = 0; int step = 2; <START> total += step; <END> return total; }",
        "rename step to delta",
        "int f() { int total = 0; int delta = 2; total += delta; return total; }",
    );
    let v8 = apply(P::P8, &i, 2).unwrap();
    // The revision's new local is renamed too, and the comment follows.
    let words: Vec<&str> = v8.comment.split(' ').collect();
    assert_eq!((words[0], words[2]), ("rename", "to"));
    assert!(v8.code.contains(words[1]) && v8.revision.contains(words[3]));
    assert!(!v8.revision.contains("delta"));
    let v9 = apply(P::P9, &i, 2).unwrap();
    assert_eq!(
        toks(&v9.code),
        toks("int f() { int step = 0; int total = 2; step += total; return step; }")
    );
    assert_eq!(v9.comment, "rename total to delta");
    // Non-identifier tokens are unchanged.
    for v in [&v8, &v9] {
        let mut a: Vec<_> = tokenize(&v.code).tokens.into_iter().filter(|t| t.kind != acr_core::lexer::TokenKind::Identifier).map(|t| t.text).collect();
        let mut b: Vec<_> = tokenize(&i.code).tokens.into_iter().filter(|t| t.kind != acr_core::lexer::TokenKind::Identifier).map(|t| t.text).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
    let one = inst("int f() { int a = 1; <START> return a; <END> }", "c", "int f() { return 1; }");
    assert_eq!(applicable(P::P9, &one), Err(Reason::NeedsTwoVariables));
}

#[test]
fn pairing_symmetry_for_insertions() {
    let i = inst(
        "int f(int a) { int b = a * 2; <START> return b; <END> }",
        "c",
        "int f(int a) { int b = a * 2; return b + 1; }",
    );
    let orig = edit_script(&toks(&canon(&i.code.replace("<START>", "").replace("<END>", ""))), &toks(&i.revision));
    for p in [P::P2, P::P3, P::P4, P::P6] {
        let v = apply(p, &i, 4).unwrap();
        let pert = edit_script(&toks(&v.code), &toks(&v.revision));
        let a: Vec<_> = orig.regions.iter().map(|r| (r.kind, r.tokens.clone())).collect();
        let b: Vec<_> = pert.regions.iter().map(|r| (r.kind, r.tokens.clone())).collect();
        assert_eq!(a, b, "{p}");
    }
}

#[test]
fn deterministic_and_seed_sensitive() {
    let i = inst(
        "int f() { int total = 0; int step = 2; <START> total += step; <END> return total; }",
        "c",
        "int f() { int total = 0; int step = 3; total += step; return total; }",
    );
    assert_eq!(apply(P::P8, &i, 11).unwrap(), apply(P::P8, &i, 11).unwrap());
    assert_ne!(apply(P::P8, &i, 11).unwrap().code, apply(P::P8, &i, 12).unwrap().code);
    for p in P::ALL {
        if let Ok(v) = apply(p, &i, 1) {
            assert!(token_edit_distance(&toks(&v.code), &toks(&i.code)) >= 1);
        }
    }
}
