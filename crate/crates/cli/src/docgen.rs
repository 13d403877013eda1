//! Markdown skeleton for documenting an analysis step by step.

pub struct Section {
    pub title: &'static str,
    pub media: &'static str,
    pub prompts: &'static [&'static str],
}

pub const SECTIONS: [Section; 6] = [
    Section {
        title: "Domain problem formulation",
        media: "narrative",
        prompts: &[
            "What real-world question motivates this analysis, and who will act on the answer?",
            "Which earlier studies or methods bear on it?",
            "How does the question map onto a prediction target and a stability target (for example the lasso-selected feature set)?",
        ],
    },
    Section {
        title: "Data collection and storage",
        media: "narrative",
        prompts: &[
            "How were the observations produced? Note the design of any experiment or survey.",
            "Why are these data informative for the question above?",
            "Where do the raw files live, and how can someone else obtain them? Record the paths passed to `pcs`.",
        ],
    },
    Section {
        title: "Data cleaning and preprocessing",
        media: "narrative, code, visualization",
        prompts: &[
            "List every transformation from raw records to the analysis matrix, including standardization.",
            "Justify each step. Where several reasonable choices exist, run them all and compare the resulting stability scores.",
        ],
    },
    Section {
        title: "Exploratory data analysis",
        media: "narrative, code, visualization",
        prompts: &[
            "Show the summaries and plots that shaped later modeling choices.",
            "State which choices they shaped and keep the code next to the figures.",
        ],
    },
    Section {
        title: "Modeling and post-hoc analysis",
        media: "narrative, code, visualization",
        prompts: &[
            "Record the analyze config: penalty path, bootstrap count, split fraction and screening rule.",
            "Explain why these data and model perturbations are appropriate for the problem.",
            "If a null hypothesis is examined, describe the constrained perturbation that generates it and attach the hypotest output.",
            "Quote the config digest and master seed of every run so the results can be regenerated exactly.",
        ],
    },
    Section {
        title: "Interpretation of results",
        media: "narrative and visualization",
        prompts: &[
            "Turn stability scores and perturbation intervals into conclusions or recommendations for the domain question.",
            "Say which findings are worth follow-up experiments and which remain uncertain.",
        ],
    },
];

pub fn render() -> String {
    let mut out = String::from("# Analysis documentation\n");
    for s in &SECTIONS {
        out.push_str(&format!("\n## {}\n\n_Format: {}._\n\n", s.title, s.media));
        for p in s.prompts {
            out.push_str(&format!("- TODO: {p}\n"));
        }
    }
    out
}
