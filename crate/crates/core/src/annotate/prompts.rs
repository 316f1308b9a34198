//! Prompt templates for the annotator.
//!
//! The templates are functional data and are reproduced verbatim, including
//! their original wording quirks, because annotators are sensitive to exact
//! phrasing. Slots are rendered as a JSON-ish `{"..."}` wrapper around the
//! caption.

use std::fmt;
use std::str::FromStr;

pub const SYSTEM_PROMPT: &str = "You are a helpful and honest judge of good gameplaying and progress in the NetHack game. Always answer as helpfully as possible, while being truthful.

If you don't know the answer to a question, please don't share false information.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GoalVariant {
    #[default]
    Default,
    Combat,
    Gold,
}

impl GoalVariant {
    pub const ALL: [GoalVariant; 3] = [GoalVariant::Default, GoalVariant::Combat, GoalVariant::Gold];

    /// Goal string used by the bag-of-words baseline.
    pub fn goal_string(self) -> &'static str {
        match self {
            GoalVariant::Default => "Prefer agents that maximize the score in the game, for instance by killing monsters, collecting gold or going down the stairs in the dungeon.",
            GoalVariant::Combat => "Prefer agents that engage in combat, for instance by killing monsters. But never prefer agents that collect ANY gold or that go down the dungeon.",
            GoalVariant::Gold => "Prefer agents that maximize their gold. But never prefer agents that maximize the score in other ways (e.g., by engaging in combat or killing monsters) or that go down the dungeon.",
        }
    }
}

impl fmt::Display for GoalVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalVariant::Default => "default",
            GoalVariant::Combat => "combat",
            GoalVariant::Gold => "gold",
        })
    }
}

impl FromStr for GoalVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(GoalVariant::Default),
            "combat" => Ok(GoalVariant::Combat),
            "gold" => Ok(GoalVariant::Gold),
            _ => Err(format!("unknown goal variant {s:?} (expected default, combat, gold)")),
        }
    }
}

const BINARY_HEAD: &str = "Context: I am playing NetHack and I will present you a message from the gameplay.

Instruction: First, tell me about your knowledge of NetHack. Mention the goal of NetHack.
Then, write an analysis describing the semantics of each message using your knowledge of NetHack. Finally, respond by assigning a score to the message, which measures whether the status represented by the message is helpful or unhelpful to make some progress towards the goal.
Helpful here does not mean whether it is informative to the player to make decisions or not, but whether it is helpful for the agent to solve the game.
";

const PREFERENCE_DEFAULT: &str = "I prefer agents that maximize the score in the game, for instance by killing monsters, collecting gold or going down the stairs in the dungeon.\n";
const PREFERENCE_COMBAT: &str = "I prefer agents engage in combat, for instance by killing monsters. But never prefer agents that collect ANY gold or that go down the dungeon.\n";
const PREFERENCE_GOLD: &str = "I prefer agents that maximize their gold. But never prefer agents that maximize the score in other ways (e.g., by engaging in combat or killing monsters) or that go down the dungeon.\n";

const LABEL_RULE: &str = "For extremely helpful messages, assign a label FOO. For unhelpful, neutral, and lukewarm messages, assign a label BAR.\n\n";

const EXAMPLES_DEFAULT: &str = "Example 1: \"You kill the goblin!  Welcome to experience level 4\" indicates that the player
has killed a goblin and gained experience. This led to a level up and increased abilities.
Gaining experience and leveling up are both extremely helpful and this message should be labelled as FOO.

Example 2: \"You hear someone counting money.\" indicates that the player is close to a source of gold, as the sound of counting money suggests a nearby NPC or monster with treasure.
This is also extremely helpful and should be labelled as FOO.

Example 3: \"5 gold pieces.\" indicates you collected 5 gold coins. This is extremely helpful should be labelled as FOO.

Example 4: \"That door is closed.\" is neutral and should be labelled as BAR.

";

const EXAMPLES_COMBAT: &str = "Example 1: \"You kill the goblin!  Welcome to experience level 4\" indicates that the player
has killed a goblin and gained experience. This led to a level up and increased abilities.
Gaining experience and leveling up are both extremely helpful and this message should be labelled as FOO.

Example 2: \"You hear someone counting money.\" indicates that the player is close to a source of gold, as the sound of counting money suggests a nearby NPC or monster with treasure.
This is not helpful and should be labelled as BAR.

Example 3: \"5 gold pieces.\" indicates you collected 5 gold coins. This is not aligned with our goal and should be labelled as BAR.

Example 4: \"That door is closed.\" is neutral and should be labelled as BAR.

";

const EXAMPLES_GOLD: &str = "Example 1: \"You kill the goblin!  Welcome to experience level 4\" indicates that the player
has killed a goblin and gained experience.  This is not aligned with our goal and should be labelled as BAR.

Example 2: \"You hear someone counting money.\" indicates that the player is close to a source of gold, as the sound of counting money suggests a nearby NPC or monster with treasure. This is extremely helpful and should be labelled as FOO.

Example 3: \"5 gold pieces.\" indicates you collected 5 gold coins. This is extremely helpful and should be labelled as FOO.

Example 4: \"That door is closed.\" is neutral and should be labelled as BAR.

";

pub const RATE_PREFIX: &str = "Please rate this message: {\"";
pub const RATE_SUFFIX: &str = "\"}

Constraint: Please format your response strictly in this format without additional explanation:
<knowledge> [your knowledge of NetHack] </knowledge>
<analysis> [your one-sentence analysis of the message] </analysis>
<label> [FOO/BAR] </label>";

const RANKING_HEAD: &str = "I will present you with two short gameplay descriptions.
First, tell me about your knowledge of NetHack. Mention the goal of NetHack. ";

const RANKING_TAIL: &str = "
Then, write an analysis describing the semantics of each description strictly using information from the descriptions (which may be empty) and your knowledge of NetHack.
Provide a comparative analysis based on first principles.
Finally, respond by explicitly declaring which one is the most likely to make some progress towards the goal, writing either (\"best_description\": 1), (\"best_description\": 2). You could also say (\"best_description\": None).

";

pub const DESC1_PREFIX: &str = "{\n\"description_1\":\n\"";
pub const DESC2_PREFIX: &str = "\"\n}\n\n{\n\"description_2\":\n\"";
pub const DESC_SUFFIX: &str = "\"\n}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

pub fn build_binary_prompt(caption: &str, goal: GoalVariant) -> Prompt {
    let (pref, examples) = match goal {
        GoalVariant::Default => (PREFERENCE_DEFAULT, EXAMPLES_DEFAULT),
        GoalVariant::Combat => (PREFERENCE_COMBAT, EXAMPLES_COMBAT),
        GoalVariant::Gold => (PREFERENCE_GOLD, EXAMPLES_GOLD),
    };
    let mut user = String::with_capacity(4096);
    user.push_str(BINARY_HEAD);
    user.push_str(pref);
    user.push_str(LABEL_RULE);
    user.push_str(examples);
    user.push_str(RATE_PREFIX);
    user.push_str(caption);
    user.push_str(RATE_SUFFIX);
    Prompt { system: SYSTEM_PROMPT.to_string(), user }
}

/// The ranking prompt. Non-default goals substitute their goal string for
/// the default preference sentence.
pub fn build_ranking_prompt(caption1: &str, caption2: &str, goal: GoalVariant) -> Prompt {
    let mut user = String::with_capacity(2048);
    user.push_str(RANKING_HEAD);
    user.push_str(goal.goal_string());
    user.push_str(RANKING_TAIL);
    user.push_str(DESC1_PREFIX);
    user.push_str(caption1);
    user.push_str(DESC2_PREFIX);
    user.push_str(caption2);
    user.push_str(DESC_SUFFIX);
    Prompt { system: SYSTEM_PROMPT.to_string(), user }
}

/// Recovers the goal variant a binary or ranking prompt was built with.
pub fn detect_goal(user: &str) -> GoalVariant {
    if user.contains(PREFERENCE_COMBAT.trim_end()) || user.contains(GoalVariant::Combat.goal_string()) {
        GoalVariant::Combat
    } else if user.contains(PREFERENCE_GOLD.trim_end()) || user.contains(GoalVariant::Gold.goal_string()) {
        GoalVariant::Gold
    } else {
        GoalVariant::Default
    }
}

/// Extracts the caption slot of a binary prompt.
pub fn extract_binary_caption(user: &str) -> Option<&str> {
    let start = user.rfind(RATE_PREFIX)? + RATE_PREFIX.len();
    let end = user.len().checked_sub(RATE_SUFFIX.len())?;
    if !user.ends_with(RATE_SUFFIX) || end < start {
        return None;
    }
    Some(&user[start..end])
}

/// Extracts both description slots of a ranking prompt.
pub fn extract_ranking_captions(user: &str) -> Option<(&str, &str)> {
    let start = user.find(DESC1_PREFIX)? + DESC1_PREFIX.len();
    let end = user.len().checked_sub(DESC_SUFFIX.len())?;
    if !user.ends_with(DESC_SUFFIX) || end < start {
        return None;
    }
    let body = &user[start..end];
    let mid = body.rfind(DESC2_PREFIX)?;
    Some((&body[..mid], &body[mid + DESC2_PREFIX.len()..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_prompt_slot() {
        let p = build_binary_prompt("5 gold pieces.", GoalVariant::Default);
        assert!(p.user.contains("Please rate this message: {\"5 gold pieces.\"}"));
        assert_eq!(p.system, SYSTEM_PROMPT);
        let blank = build_binary_prompt("", GoalVariant::Default);
        assert!(blank.user.contains("Please rate this message: {\"\"}"));
    }

    #[test]
    fn goal_variants_differ() {
        let c = build_binary_prompt("You kill the newt!", GoalVariant::Combat).user;
        assert!(c.contains("never prefer agents that collect ANY gold"));
        assert!(c.contains("This is not aligned with our goal and should be labelled as BAR."));
        let g = build_binary_prompt("x", GoalVariant::Gold).user;
        assert!(g.contains("gained experience.  This is not aligned"));
        for v in GoalVariant::ALL {
            assert_eq!(detect_goal(&build_binary_prompt("x", v).user), v);
            assert_eq!(detect_goal(&build_ranking_prompt("a", "b", v).user), v);
        }
    }

    #[test]
    fn ranking_prompt_slots() {
        let p = build_ranking_prompt("a", "b", GoalVariant::Default);
        assert!(p.user.contains("{\n\"description_1\":\n\"a\"\n}"));
        assert!(p.user.contains("{\n\"description_2\":\n\"b\"\n}"));
        assert!(p.user.contains("Mention the goal of NetHack. Prefer agents that maximize the score"));
        assert_eq!(extract_ranking_captions(&p.user), Some(("a", "b")));
        let e = build_ranking_prompt("", "x", GoalVariant::Default);
        assert_eq!(extract_ranking_captions(&e.user), Some(("", "x")));
    }

    #[test]
    fn caption_extraction_handles_quotes() {
        let cap = "He said \"hi\"}  odd";
        let p = build_binary_prompt(cap, GoalVariant::Gold);
        assert_eq!(extract_binary_caption(&p.user), Some(cap));
    }
}
