//! Printer/parser round-trips over generated programs.

use proptest::prelude::*;

use chad_core::gen::{gen_ctx, gen_term, gen_type};
use chad_core::parser::parse_source;
use chad_core::pretty::pretty_def;
use chad_core::rng::Rng;
use chad_core::syntax::SrcDef;
use chad_core::target::pretty::pretty_tgt_term;
use chad_core::target::reader::read_tgt_term;
use chad_core::transform::chad_def;
use chad_core::typecheck::typecheck_source_shadowing;

fn program_from_seed(seed: u64) -> SrcDef {
    let mut rng = Rng::new(seed);
    let ctx = gen_ctx(&mut rng);
    let ty = gen_type(&mut rng, 2);
    let body = gen_term(&mut rng, &ctx, &ty, 3);
    let ret = typecheck_source_shadowing(&ctx, &body).expect("generator produces typed terms");
    SrcDef { name: "gen".into(), ctx, ret, body }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// parse . pretty is the identity on generated programs.
    #[test]
    fn source_parse_inverts_pretty(seed: u64) {
        let def = program_from_seed(seed);
        let text = pretty_def(&def);
        let back = parse_source(&text)
            .unwrap_or_else(|e| panic!("{e}\n---\n{text}"));
        prop_assert_eq!(back, def);
    }

    /// pretty is stable: printing the reparsed program reproduces the text.
    #[test]
    fn source_pretty_is_canonical(seed: u64) {
        let def = program_from_seed(seed);
        let text = pretty_def(&def);
        let back = parse_source(&text).unwrap();
        prop_assert_eq!(pretty_def(&back), text);
    }

    /// The target reader inverts the target printer on transform output.
    #[test]
    fn target_reader_inverts_printer(seed: u64) {
        let def = program_from_seed(seed);
        let out = chad_def(&def.ctx, &def.ret, &def.body).unwrap();
        let text = pretty_tgt_term(&out.term);
        let back = read_tgt_term(&text)
            .unwrap_or_else(|e| panic!("{e}\n---\n{text}"));
        prop_assert_eq!(back, out.term);
    }
}
