//! The caption grammar.
//!
//! A caption is zero or more message segments joined by two spaces, the way
//! the game's message line concatenates messages emitted in one turn. Every
//! segment is an instance of exactly one [`Template`].

use std::sync::OnceLock;

use regex::Regex;

/// Separator between message segments inside one caption.
pub const SEGMENT_SEPARATOR: &str = "  ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    Kill,
    Hit,
    Miss,
    ThinAir,
    MonsterHits,
    MonsterMisses,
    MonsterFlees,
    Corpse,
    GoldPickup,
    GoldHere,
    NothingToPickUp,
    HiddenPassage,
    Draft,
    DoorClosed,
    DoorOpens,
    StairsHere,
    CantGoDown,
    Descend,
    LevelUp,
    CombatSkill,
    FeelWeak,
    FeelBetter,
    Death,
    CountingMoney,
    CashRegister,
    GuardFootsteps,
    BubblingWater,
    DistantDoor,
    Splashing,
    Crunching,
    Noises,
    Squeak,
}

/// Template patterns; `{m}` is a monster name, `{verb}` its attack verb,
/// `{n}`/`{k}` are positive integers.
pub const TEMPLATES: &[(Template, &str)] = &[
    (Template::Kill, "You kill the {m}!"),
    (Template::Hit, "You hit the {m}."),
    (Template::Miss, "You miss the {m}."),
    (Template::ThinAir, "You harmlessly attack thin air."),
    (Template::MonsterHits, "The {m} {verb}!"),
    (Template::MonsterMisses, "The {m} misses!"),
    (Template::MonsterFlees, "The {m} turns to flee."),
    (Template::Corpse, "You see here a {m} corpse."),
    (Template::GoldPickup, "{n} gold pieces."),
    (Template::GoldHere, "You see here {n} gold pieces."),
    (Template::NothingToPickUp, "There is nothing here to pick up."),
    (Template::HiddenPassage, "You find a hidden passage."),
    (Template::Draft, "You feel a draft."),
    (Template::DoorClosed, "That door is closed."),
    (Template::DoorOpens, "The door opens."),
    (Template::StairsHere, "There is a staircase down here."),
    (Template::CantGoDown, "You can't go down here."),
    (Template::Descend, "You climb down to dungeon level {k}."),
    (Template::LevelUp, "Welcome to experience level {k}."),
    (Template::CombatSkill, "You feel more confident in your combat skills."),
    (Template::FeelWeak, "You feel weak."),
    (Template::FeelBetter, "You feel much better."),
    (Template::Death, "You die..."),
    (Template::CountingMoney, "You hear someone counting money."),
    (Template::CashRegister, "You hear the chime of a cash register."),
    (Template::GuardFootsteps, "You hear the footsteps of a guard on patrol."),
    (Template::BubblingWater, "You hear bubbling water."),
    (Template::DistantDoor, "You hear a door open."),
    (Template::Splashing, "You hear the splashing of a naiad."),
    (Template::Crunching, "You hear a crunching sound."),
    (Template::Noises, "You hear some noises in the distance."),
    (Template::Squeak, "You hear a distant squeak."),
];

fn compiled() -> &'static [(Template, Regex)] {
    static CELL: OnceLock<Vec<(Template, Regex)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let monster = crate::monster::MonsterKind::ALL
            .iter()
            .map(|k| regex::escape(k.name()))
            .collect::<Vec<_>>()
            .join("|");
        let verbs = "bites|hits|stings";
        TEMPLATES
            .iter()
            .map(|&(t, pat)| {
                let mut re = regex::escape(pat);
                // `regex::escape` leaves braces escaped as `\{m\}`.
                re = re
                    .replace(r"\{m\}", &format!("(?:{monster})"))
                    .replace(r"\{verb\}", &format!("(?:{verbs})"))
                    .replace(r"\{n\}", "[1-9][0-9]*")
                    .replace(r"\{k\}", "[1-9][0-9]*");
                (t, Regex::new(&format!("^{re}$")).expect("template regex"))
            })
            .collect()
    })
}

/// Classifies a single message segment.
pub fn classify_segment(segment: &str) -> Option<Template> {
    compiled().iter().find(|(_, re)| re.is_match(segment)).map(|&(t, _)| t)
}

/// Splits a caption into its segments. The blank caption has none.
pub fn segments(caption: &str) -> impl Iterator<Item = &str> {
    caption.split(SEGMENT_SEPARATOR).filter(|s| !s.is_empty())
}

/// Classifies every segment; `None` if any segment is outside the grammar.
pub fn classify(caption: &str) -> Option<Vec<Template>> {
    segments(caption).map(classify_segment).collect()
}

pub fn is_well_formed(caption: &str) -> bool {
    if caption.is_empty() {
        return true;
    }
    if caption.starts_with(' ') || caption.ends_with(' ') || caption.contains("   ") {
        return false;
    }
    classify(caption).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_segments_classify() {
        assert_eq!(classify_segment("You kill the goblin!"), Some(Template::Kill));
        assert_eq!(classify_segment("5 gold pieces."), Some(Template::GoldPickup));
        assert_eq!(classify_segment("You see here 12 gold pieces."), Some(Template::GoldHere));
        assert_eq!(classify_segment("The jackal bites!"), Some(Template::MonsterHits));
        assert_eq!(classify_segment("Welcome to experience level 4."), Some(Template::LevelUp));
        assert_eq!(classify_segment("You climb down to dungeon level 3."), Some(Template::Descend));
        assert_eq!(classify_segment("That door is closed."), Some(Template::DoorClosed));
        assert_eq!(classify_segment("You kill the dragon!"), None);
        assert_eq!(classify_segment("0 gold pieces."), None);
    }

    #[test]
    fn multi_segment_captions() {
        let c = "You kill the newt!  Welcome to experience level 2.";
        assert_eq!(classify(c), Some(vec![Template::Kill, Template::LevelUp]));
        assert!(is_well_formed(c));
        assert!(is_well_formed(""));
        assert!(!is_well_formed("You kill the newt! Welcome"));
        assert!(!is_well_formed(" You hear bubbling water."));
    }

    #[test]
    fn every_template_has_a_sample() {
        for &(t, pat) in TEMPLATES {
            let sample = pat
                .replace("{m}", "newt")
                .replace("{verb}", "bites")
                .replace("{n}", "7")
                .replace("{k}", "3");
            assert_eq!(classify_segment(&sample), Some(t), "{pat}");
        }
    }
}
