//! Reference nets, shipped as text fixtures and embedded at build time.

use crate::format::parse_net;
use crate::net::LabelledNet;

macro_rules! fixture {
    ($fn:ident, $file:literal) => {
        pub fn $fn() -> LabelledNet {
            parse_net(include_str!(concat!("../../../fixtures/", $file)))
                .expect(concat!("fixture ", $file, " parses"))
        }
    };
}

fixture!(fig1, "fig1.net");
fixture!(fig2, "fig2.net");
fixture!(fig3, "fig3.net");
fixture!(fig4, "fig4.net");
fixture!(fig5, "fig5.net");
fixture!(fig6_spec, "fig6-spec.net");
fixture!(fig6_impl, "fig6-impl.net");
fixture!(fig7_spec, "fig7-spec.net");
fixture!(fig7_impl, "fig7-impl.net");

/// Every fixture with its file stem.
pub fn all() -> Vec<(&'static str, LabelledNet)> {
    vec![
        ("fig1", fig1()),
        ("fig2", fig2()),
        ("fig3", fig3()),
        ("fig4", fig4()),
        ("fig5", fig5()),
        ("fig6-spec", fig6_spec()),
        ("fig6-impl", fig6_impl()),
        ("fig7-spec", fig7_spec()),
        ("fig7-impl", fig7_impl()),
    ]
}
