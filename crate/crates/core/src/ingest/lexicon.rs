//! Word lists used by the rule-based extractor.

/// Imperative verbs that open a protocol step.
pub const VERBS: &[&str] = &[
    "add", "adjust", "agitate", "aliquot", "allow", "amplify", "analyze", "anneal", "apply", "aspirate", "attach",
    "autoclave", "blend", "block", "boil", "bring", "calculate", "centrifuge", "change", "check", "chill", "clean",
    "close", "collect", "combine", "concentrate", "continue", "cool", "count", "cover", "culture", "cut", "decant",
    "degas", "denature", "detach", "digest", "dilute", "discard", "dispense", "dissolve", "distribute", "divide", "drain",
    "dry", "electroporate", "elute", "embed", "ensure", "equilibrate", "evaporate", "examine", "extract", "feed", "fill",
    "filter", "fix", "flush", "freeze", "grind", "grow", "harvest", "heat", "homogenize", "hybridize", "image",
    "immerse", "incubate", "inject", "inoculate", "insert", "invert", "isolate", "keep", "label", "leave", "ligate",
    "load", "lyophilize", "lyse", "maintain", "measure", "melt", "microcentrifuge", "mix", "mount", "neutralize",
    "note", "observe", "open", "passage", "pellet", "perform", "permeabilize", "pipette", "place", "plate", "pour",
    "precipitate", "prepare", "prewarm", "proceed", "purify", "quantify", "quench", "record", "reconstitute",
    "rehydrate", "remove", "repeat", "replace", "resuspend", "rinse", "rotate", "run", "scan", "scrape", "seal", "seed",
    "select", "separate", "sequence", "set", "shake", "soak", "sonicate", "spin", "split", "spread", "stain", "sterilize",
    "stir", "store", "streak", "submerge", "supplement", "suspend", "swirl", "take", "thaw", "titrate", "transfer",
    "transform", "treat", "trypsinize", "use", "visualize", "vortex", "wait", "warm", "wash", "weigh", "wipe",
];

/// Verbs dropped by default: they carry no operation of their own.
pub const DEFAULT_STOP_VERBS: &[&str] = &["allow", "continue", "ensure", "note", "perform", "proceed", "repeat", "use"];

/// Adverbs and discourse words that may precede the imperative verb.
pub const ADVERBS: &[&str] = &[
    "again", "also", "briefly", "carefully", "finally", "first", "gently", "immediately", "next", "now", "optionally",
    "quickly", "rapidly", "second", "slowly", "subsequently", "then", "thoroughly", "vigorously", "afterwards",
];

/// Words opening a leading subordinate clause that ends at the first comma.
pub const SUBORDINATORS: &[&str] = &["after", "before", "once", "when", "while", "if", "following", "upon", "for", "to", "using"];

/// Device head nouns; matched against the last word of a noun phrase.
pub const DEVICE_HEADS: &[&str] = &[
    "autoclave", "balance", "cycler", "centrifuge", "cytometer", "fluorometer", "freezer", "fridge", "homogenizer",
    "hood", "incubator", "microcentrifuge", "microscope", "mixer", "nanodrop", "oven", "reader", "refrigerator",
    "rotator", "shaker", "sonicator", "spectrophotometer", "speedvac", "thermocycler", "thermomixer", "vortexer",
    "imager", "sequencer", "stand", "rack", "bath", "block", "evaporator", "concentrator",
];

/// Vessel nouns. A vessel named after a preposition is a container, not an
/// input.
pub const CONTAINER_HEADS: &[&str] = &[
    "beaker", "bottle", "cuvette", "dish", "flask", "plate", "slide", "tube", "tubes", "vial", "well", "wells", "plates",
    "dishes", "flasks", "vials", "bottles", "column",
];

/// Determiners and quantity words skipped at the start of a noun phrase.
pub const DETERMINERS: &[&str] = &[
    "a", "an", "the", "each", "all", "some", "this", "that", "these", "those", "its", "their", "both", "any", "every",
    "another", "one", "two", "three",
];

/// Modifiers that do not change which component is meant.
pub const VACUOUS_MODIFIERS: &[&str] =
    &["resulting", "remaining", "entire", "whole", "same", "above", "previous", "obtained", "collected", "prepared"];

/// Words that end a noun phrase.
pub const NP_BREAKS: &[&str] = &[
    "at", "for", "in", "into", "on", "onto", "to", "with", "from", "by", "using", "under", "until", "over", "through",
    "via", "per", "of", "and", "or", "then", "as", "before", "after", "while", "without", "overnight", "until", "so",
    "if", "is", "are", "was", "were", "be", "it", "them", "well", "gently", "briefly", "thoroughly", "carefully",
    "immediately", "again", "twice", "once", "thrice",
];

/// Verbs that, after "to", introduce the step's outputs.
pub const OUTPUT_VERBS: &[&str] =
    &["obtain", "collect", "yield", "produce", "form", "generate", "get", "give", "recover", "make", "create"];

/// Prepositions whose object may be an input, a device or a container.
pub const OBJECT_PREPOSITIONS: &[&str] = &["to", "into", "with", "from", "onto", "in", "on", "using"];

pub fn contains(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}
