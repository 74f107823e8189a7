//! Prompt construction for the mapping finder and the naive baseline.
//!
//! Prompts are built from the symbolic formulations only — set contents and
//! parameter values never appear — so prompt size depends on the number of
//! variable sets, not on instance cardinalities.

use crate::model::{serialize_formulation, Formulation};

/// Per-variable prompt texts for the mapping task, or a single naive prompt.
#[derive(Debug, Clone)]
pub struct PromptBundle {
    /// (target α variable, prompt text)
    pub prompts: Vec<(String, String)>,
    /// crude byte/4 token estimate over all prompts
    pub token_estimate: usize,
}

fn constraints_block(f: &Formulation, var: &str, indent: &str) -> String {
    let mut out = String::new();
    for c in &f.constraints {
        let mut names = c.lhs.variable_names();
        names.extend(c.rhs.variable_names());
        if !names.iter().any(|n| n == var) {
            continue;
        }
        out.push_str(&format!(
            "{indent}- Description: {}\n{indent}  Formulation: {} {} {}\n",
            c.description,
            c.lhs.render(),
            c.relation.as_str(),
            c.rhs.render()
        ));
    }
    out
}

fn in_objective(f: &Formulation, var: &str) -> &'static str {
    if f.objective.expr.variable_names().iter().any(|n| n == var) {
        "Yes"
    } else {
        "No"
    }
}

/// The mapping prompt for one α variable, following the published transcript
/// structure: the target variable's digest, every α′ variable's digest, then
/// the response contract with its four worked examples.
pub fn build_mapping_prompt(alpha: &Formulation, alpha_prime: &Formulation, target: &str) -> String {
    let mut p = String::new();
    p.push_str("You are an AI language model assisting in mapping variables between two optimization problems by analyzing their roles in constraints and the objective function.\n\n");
    p.push_str("**Variable from Problem 1:**\n");
    p.push_str(&format!("- **Name:** {target}\n"));
    p.push_str(&format!(
        "- **Description:** {}\n",
        alpha
            .variables
            .get(target)
            .map(|d| d.description.as_str())
            .unwrap_or("")
    ));
    p.push_str(&format!("- **Constraints involving {target}:**\n"));
    p.push_str(&constraints_block(alpha, target, "  "));
    p.push_str(&format!(
        "- **In Objective Function:** {}\n\n",
        in_objective(alpha, target)
    ));
    p.push_str("**Variables from Problem 2:**\n");
    for (name, decl) in &alpha_prime.variables {
        p.push_str(&format!("- **Name:** {name}\n"));
        p.push_str(&format!("  **Description:** {}\n", decl.description));
        p.push_str(&format!("  **Constraints involving {name}:**\n"));
        p.push_str(&constraints_block(alpha_prime, name, "    "));
        p.push_str(&format!(
            "  **In Objective Function:** {}\n\n",
            in_objective(alpha_prime, name)
        ));
    }
    p.push('\n');
    p.push_str(&format!("Based on the above information, find the best mapping from variables in Problem 2 for the variable '{target}' from Problem 1. The mapping can be a linear combination of variables from Problem 2, possibly with constant multipliers. Your goal is to express '{target}' in terms of variables from Problem 2, as accurately as possible, based on their roles in the constraints and objective functions.\n\n"));
    p.push_str("**Important Instructions:**\n\n");
    p.push_str(&format!(
        "- **Provide only the mapping for '{target}' as a JSON object.**\n"
    ));
    p.push_str("- **Do not include any additional text, explanations, or formatting.**\n");
    p.push_str("- **The JSON object must follow this exact structure:**\n\n");
    p.push_str(&format!(
        "{{\n  \"{target}\": [\n    {{\n      \"constant\": constant_value_1,\n      \"variable\": \"variable_name_1\"\n    }},\n    {{\n      \"constant\": constant_value_2,\n      \"variable\": \"variable_name_2\"\n    }},\n    ...\n  ]\n}}\n\n"
    ));
    p.push_str("- **If there is only one term in the mapping, the list should contain a single object.**\n");
    p.push_str("- **Use numerical values for constants (decimals), and enclose variable names in double quotes (\"\").**\n\n");
    p.push_str("**Examples:**\n\n");
    p.push_str("1. If the best mapping is '0.1*a', your response should be:\n\n");
    p.push_str(&format!(
        "{{\n  \"{target}\": [\n    {{\n      \"constant\": 0.1,\n      \"variable\": \"a\"\n    }}\n  ]\n}}\n\n"
    ));
    p.push_str("2. If the best mapping is '0.1*a + 0.01*b', your response should be:\n\n");
    p.push_str(&format!(
        "{{\n  \"{target}\": [\n    {{\n      \"constant\": 0.1,\n      \"variable\": \"a\"\n    }},\n    {{\n      \"constant\": 0.01,\n      \"variable\": \"b\"\n    }}\n  ]\n}}\n\n"
    ));
    p.push_str("3. If the best mapping is a single variable 'a' with a coefficient of 1, your response should be:\n\n");
    p.push_str(&format!(
        "{{\n  \"{target}\": [\n    {{\n      \"constant\": 1,\n      \"variable\": \"a\"\n    }}\n  ]\n}}\n\n"
    ));
    p.push_str("4. If there is no direct mapping, your response should be:\n\n");
    p.push_str(&format!(
        "{{\n  \"{target}\": [\n    {{\n      \"constant\": \"none\",\n      \"variable\": \"none\"\n    }}\n  ]\n}}\n\n"
    ));
    p.push_str("Please ensure your response is a valid JSON object that can be parsed by standard JSON parsers.\n");
    p
}

/// All per-variable prompts for a pair, one per α variable set.
pub fn build_mapping_prompts(alpha: &Formulation, alpha_prime: &Formulation) -> PromptBundle {
    let prompts: Vec<(String, String)> = alpha
        .variables
        .keys()
        .map(|v| (v.clone(), build_mapping_prompt(alpha, alpha_prime, v)))
        .collect();
    let token_estimate = prompts.iter().map(|(_, p)| p.len()).sum::<usize>() / 4;
    PromptBundle {
        prompts,
        token_estimate,
    }
}

/// The single-shot naive equivalence prompt: both formulation documents plus
/// the fixed decision instructions.
pub fn build_naive_prompt(alpha: &Formulation, alpha_prime: &Formulation) -> String {
    let mut p = String::new();
    p.push_str("You are given two optimization problem formulations (both declared as MIP).\nDecide if they are equivalent formulations.\n\n");
    p.push_str("First problem formulation (Problem A):\n");
    p.push_str(&serialize_formulation(alpha));
    p.push_str("\n\nSecond problem formulation (Problem B):\n");
    p.push_str(&serialize_formulation(alpha_prime));
    p.push_str("\n\nBased on the data, please respond with exactly one of the following:\n");
    p.push_str("- \"Equivalent\" if these two are the same formulation. Be rigorous in your reasoning. \n");
    p.push_str("- \"Not Equivalent\" if they are different. When you are not sure, say \"Not Equivalent\".\n\n");
    p.push_str("Briefly explain the reasoning in 1-2 sentences, then end with the word \"Equivalent\" or \"Not Equivalent\" on its own line.\n");
    p
}
