#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MonsterKind {
    Newt,
    GridBug,
    Jackal,
    SewerRat,
    Coyote,
    Goblin,
    Kobold,
    Hobbit,
    Gnome,
    GiantAnt,
    HillOrc,
    Homunculus,
    Hobgoblin,
    Dwarf,
}

#[derive(Debug, Clone, Copy)]
pub struct MonsterStats {
    pub name: &'static str,
    pub hp: i32,
    pub damage: i32,
    pub xp: u32,
    pub verb: &'static str,
    /// Shallowest dungeon level the monster is generated on.
    pub min_depth: u32,
}

impl MonsterKind {
    pub const ALL: [MonsterKind; 14] = [
        MonsterKind::Newt,
        MonsterKind::GridBug,
        MonsterKind::Jackal,
        MonsterKind::SewerRat,
        MonsterKind::Coyote,
        MonsterKind::Goblin,
        MonsterKind::Kobold,
        MonsterKind::Hobbit,
        MonsterKind::Gnome,
        MonsterKind::GiantAnt,
        MonsterKind::HillOrc,
        MonsterKind::Homunculus,
        MonsterKind::Hobgoblin,
        MonsterKind::Dwarf,
    ];

    pub fn stats(self) -> MonsterStats {
        use MonsterKind::*;
        let (name, hp, damage, xp, verb, min_depth) = match self {
            Newt => ("newt", 2, 1, 3, "bites", 1),
            GridBug => ("grid bug", 1, 1, 2, "bites", 1),
            Jackal => ("jackal", 3, 1, 7, "bites", 1),
            SewerRat => ("sewer rat", 3, 2, 6, "bites", 1),
            Coyote => ("coyote", 4, 2, 8, "bites", 2),
            Goblin => ("goblin", 5, 2, 9, "hits", 2),
            Kobold => ("kobold", 5, 2, 9, "hits", 2),
            Hobbit => ("hobbit", 5, 2, 10, "hits", 2),
            Gnome => ("gnome", 6, 2, 12, "hits", 3),
            GiantAnt => ("giant ant", 8, 3, 20, "bites", 3),
            HillOrc => ("hill orc", 9, 3, 22, "hits", 4),
            Homunculus => ("homunculus", 7, 3, 18, "stings", 4),
            Hobgoblin => ("hobgoblin", 8, 3, 15, "hits", 4),
            Dwarf => ("dwarf", 10, 4, 28, "hits", 5),
        };
        MonsterStats { name, hp, damage, xp, verb, min_depth }
    }

    pub fn name(self) -> &'static str {
        self.stats().name
    }

    /// Kinds that may be generated on dungeon level `depth`.
    pub fn eligible(depth: u32) -> Vec<MonsterKind> {
        Self::ALL.iter().copied().filter(|k| k.stats().min_depth <= depth).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monster {
    pub kind: MonsterKind,
    pub hp: i32,
    /// Attack counter; every third attack misses, keeping combat deterministic.
    pub attacks: u32,
    pub fleeing: bool,
}

impl Monster {
    pub fn new(kind: MonsterKind) -> Self {
        Self { kind, hp: kind.stats().hp, attacks: 0, fleeing: false }
    }
}
