//! Versioned prompt templates shipped with the crate.
//!
//! Each asset holds a system message, a line `---`, then the user template
//! with `{{name}}` placeholders.

#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub name: &'static str,
    source: &'static str,
}

pub const SCENE_ANALYST: Template = Template { name: "scene_analyst.v1", source: include_str!("../assets/prompts/scene_analyst.v1.txt") };
pub const EXPANDER: Template = Template { name: "expander.v1", source: include_str!("../assets/prompts/expander.v1.txt") };
pub const CRITIC: Template = Template { name: "critic.v1", source: include_str!("../assets/prompts/critic.v1.txt") };
pub const REFLECTOR: Template = Template { name: "reflector.v1", source: include_str!("../assets/prompts/reflector.v1.txt") };

impl Template {
    fn split(&self) -> (&'static str, &'static str) {
        let (system, user) = self.source.split_once("\n---\n").expect("prompt asset has a --- separator");
        (system.trim(), user.trim())
    }

    pub fn system(&self) -> String {
        self.split().0.to_string()
    }

    /// Fills the user template. Unknown placeholders are left as they are,
    /// which makes a missing variable obvious in the request log.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.split().1.to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        out
    }
}
