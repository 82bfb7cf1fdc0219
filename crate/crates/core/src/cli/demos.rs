//! Instance files shipped with the binary.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoCommand {
    Cotangent,
    CotangentB,
    Descent,
}

#[derive(Debug, Clone, Copy)]
pub struct Demo {
    pub name: &'static str,
    pub summary: &'static str,
    pub command: DemoCommand,
    pub text: &'static str,
}

pub const ALL: [Demo; 4] = [
    Demo {
        name: "lemma33",
        summary: "cotangent module of A_Σ at E1 (n=2, g=1), length 5",
        command: DemoCommand::Cotangent,
        text: include_str!("../../demos/lemma33.toml"),
    },
    Demo {
        name: "lemma34",
        summary: "cotangent module of the quotient B, including the min boundary",
        command: DemoCommand::CotangentB,
        text: include_str!("../../demos/lemma34.toml"),
    },
    Demo {
        name: "totally-complex",
        summary: "descent with μ ≡ 1, forced at every step",
        command: DemoCommand::Descent,
        text: include_str!("../../demos/totally-complex.toml"),
    },
    Demo {
        name: "synthetic-jump",
        summary: "rank function with a jump; gate fails, witness separates 5 > 4",
        command: DemoCommand::Descent,
        text: include_str!("../../demos/synthetic-jump.toml"),
    },
];

pub fn get(name: &str) -> Option<&'static Demo> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    ALL.iter().find(|d| d.name == name)
}

pub fn names() -> Vec<&'static str> {
    ALL.iter().map(|d| d.name).collect()
}
