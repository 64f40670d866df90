use proptest::prelude::*;

use refgame_core::ledger::{EscrowId, Ledger, Purpose};
use refgame_core::PartyId;

#[derive(Clone, Debug)]
enum Op {
    Endow(usize, u64),
    Transfer(usize, usize, u64),
    Fee(usize, u64),
    Open(usize, u64),
    Split(usize, usize, usize),
    SlashTo(usize, usize),
    Refund(usize),
    PayOut(usize, usize),
}

fn op() -> impl Strategy<Value = Op> {
    let p = 0..4usize;
    let e = 0..12usize;
    prop_oneof![
        (p.clone(), 0..500u64).prop_map(|(a, x)| Op::Endow(a, x)),
        (p.clone(), p.clone(), 0..200u64).prop_map(|(a, b, x)| Op::Transfer(a, b, x)),
        (p.clone(), 0..20u64).prop_map(|(a, x)| Op::Fee(a, x)),
        (p.clone(), 0..200u64).prop_map(|(a, x)| Op::Open(a, x)),
        (e.clone(), p.clone(), p.clone()).prop_map(|(i, a, b)| Op::Split(i, a, b)),
        (e.clone(), p.clone()).prop_map(|(i, a)| Op::SlashTo(i, a)),
        e.clone().prop_map(Op::Refund),
        (e, p).prop_map(|(i, a)| Op::PayOut(i, a)),
    ]
}

fn party(i: usize) -> PartyId {
    PartyId::new(format!("u{i}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn money_is_conserved(ops in proptest::collection::vec(op(), 0..60)) {
        let mut l = Ledger::new(PartyId::new("sink"));
        for o in ops {
            // failed operations must leave the ledger untouched
            let before = l.clone();
            let ok = match o {
                Op::Endow(a, x) => { l.endow(&party(a), x); true }
                Op::Transfer(a, b, x) => l.transfer(&party(a), &party(b), x).is_ok(),
                Op::Fee(a, x) => l.pay_fee(&party(a), x).is_ok(),
                Op::Open(a, x) => l.open_escrow(&party(a), Purpose::ChallengerDeposit, x).is_ok(),
                Op::Split(i, a, b) => l.slash_and_split(EscrowId(i), &party(a), &party(b)).is_ok(),
                Op::SlashTo(i, a) => l.slash_to(EscrowId(i), &party(a)).is_ok(),
                Op::Refund(i) => l.refund(EscrowId(i)).is_ok(),
                Op::PayOut(i, a) => l.pay_out(EscrowId(i), &party(a)).is_ok(),
            };
            if !ok {
                prop_assert_eq!(l.snapshot_text(), before.snapshot_text());
            }
            prop_assert!(l.conservation_check());
            prop_assert_eq!(l.grand_total(), l.endowed());
        }
    }
}
