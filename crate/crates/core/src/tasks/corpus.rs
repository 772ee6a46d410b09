//! Bundled material used when no interviewer backend is configured:
//! prose passages, image prompts, and parametric coding problems with
//! reference solutions.

use rand::seq::SliceRandom;
use rand::Rng;

use super::code::CodeSolution;

const SENTENCES: &[&str] = &[
    "The lighthouse keeper climbed the spiral stairs every evening before the storm arrived.",
    "Nobody in the village remembered who had planted the enormous walnut tree beside the chapel.",
    "Marta opened the letter slowly, afraid that the handwriting belonged to her missing brother.",
    "A thin layer of frost covered the windows, turning the morning light into silver patterns.",
    "The orchestra tuned their instruments while the conductor studied the crumpled program notes.",
    "Somewhere beneath the market square, an abandoned tunnel connected the bakery to the river.",
    "Every spring the children built small wooden boats and raced them along the flooded ditches.",
    "The professor insisted that curiosity was more valuable than any certificate hanging on a wall.",
    "Heavy clouds gathered over the harbor, and the fishermen pulled their nets aboard in silence.",
    "She kept a journal of every bird that visited the feeder, noting colors, songs, and habits.",
    "The old map showed a forgotten trail that wound through the canyon toward a hidden spring.",
    "Traffic slowed to a crawl as the parade of farm tractors rolled through the narrow streets.",
    "His grandmother taught him that patience and bread dough both need warmth and quiet time.",
    "The museum guard noticed that one painting had been hung upside down since the morning.",
    "Bright lanterns swayed above the courtyard while musicians played late into the summer night.",
    "After weeks of drought, the first rainfall released a sweet smell from the dusty meadows.",
    "The engineers argued for hours about whether the bridge could carry the weight of the trains.",
    "A stray cat adopted the bookstore and slept every afternoon inside the poetry section.",
    "The expedition reached the glacier just as the sun disappeared behind the jagged ridge.",
    "Visitors whispered in the library, although the librarian had stopped enforcing silence years ago.",
    "The gardener measured the tomato plants each week and recorded the results on a chalkboard.",
    "Thunder rolled across the valley, and the horses gathered nervously under the oak trees.",
    "Her experiment failed twice before she realized that the thermometer had been broken all along.",
    "The train station smelled of coffee, diesel, and the damp wool coats of early commuters.",
    "Several neighbors volunteered to repaint the community hall before the annual winter festival.",
    "A mysterious package arrived without a return address, wrapped in brown paper and string.",
    "The mountain village celebrated the harvest with music, dancing, and enormous plates of dumplings.",
    "Students crowded around the telescope, hoping to glimpse the rings of the distant planet.",
    "The captain studied the compass carefully, certain that the island lay somewhere to the south.",
    "Gentle waves carried pieces of driftwood onto the beach, where children turned them into castles.",
    "The detective noticed a faint smear of paint on the doorframe that everyone else had ignored.",
    "Morning fog settled over the vineyards, hiding the workers who were already picking grapes.",
    "The inventor sketched another strange machine, convinced that this version would finally work.",
    "Old photographs filled the attic, each one hinting at stories that nobody had ever told.",
    "The baker woke before dawn to prepare bread, pastries, and the famous cinnamon rolls.",
    "Wind chimes sang on the porch as the travelers unpacked their bags after a long journey.",
    "A quiet river flowed past the monastery, reflecting the towers and the drifting clouds.",
    "The committee postponed the decision until someone could explain the confusing budget report.",
    "Fireflies drifted over the pond while frogs began their loud evening chorus in the reeds.",
    "The young pianist practiced the difficult passage until her fingers finally found the rhythm.",
];

/// A passage of roughly `min_words` words assembled from the sentence bank.
pub fn passage<R: Rng + ?Sized>(min_words: usize, rng: &mut R) -> String {
    let mut picked: Vec<&str> = SENTENCES.to_vec();
    picked.shuffle(rng);
    let mut out = Vec::new();
    let mut words = 0;
    for s in picked {
        if words >= min_words {
            break;
        }
        words += s.split_whitespace().count();
        out.push(s);
    }
    out.join(" ")
}

pub const IMAGE_KEYWORDS: &[&str] = &[
    "people",
    "animals",
    "natural landscape",
    "plants",
    "vehicles",
    "everyday objects",
    "buildings",
    "food",
    "sports",
    "interiors",
];

const SCENE_OPENERS: &[&str] = &[
    "A high-resolution photograph of",
    "A detailed wide-angle image of",
    "A softly lit close-up of",
    "A vivid aerial view of",
];

const SCENE_DETAILS: &[&str] = &[
    "at sunrise with long golden shadows",
    "under an overcast sky with muted colors",
    "in late afternoon light with warm highlights",
    "surrounded by mist and scattered rays of light",
    "on a clear day with deep blue tones",
    "at dusk with glowing street lamps",
];

/// Text-to-image prompt for a keyword.
pub fn image_prompt<R: Rng + ?Sized>(keyword: &str, rng: &mut R) -> String {
    let opener = SCENE_OPENERS.choose(rng).expect("non-empty");
    let a = SCENE_DETAILS.choose(rng).expect("non-empty");
    let mut b = SCENE_DETAILS.choose(rng).expect("non-empty");
    while b == a {
        b = SCENE_DETAILS.choose(rng).expect("non-empty");
    }
    format!("{opener} {keyword} {a}. The background is rendered {b}, with sharp focus on the main subject.")
}

/// A concrete coding problem with its expected printed output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeProblem {
    pub problem: String,
    pub input: String,
    pub output: String,
    pub solution: CodeSolution,
}

const WORDS: &[&str] = &[
    "apple", "river", "stone", "cloud", "garden", "yellow", "music", "window", "orange", "planet", "bridge", "silver",
    "forest", "candle", "ocean", "letter",
];

fn py_list(xs: &[i64]) -> String {
    let items: Vec<String> = xs.iter().map(i64::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn py_bool(b: bool) -> String {
    if b { "True" } else { "False" }.to_string()
}

fn random_words<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<&'static str> {
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect()
}

fn distinct_ints<R: Rng + ?Sized>(n: usize, lo: i64, hi: i64, rng: &mut R) -> Vec<i64> {
    let span = (hi - lo + 1) as usize;
    rand::seq::index::sample(rng, span, n)
        .into_iter()
        .map(|i| lo + i as i64)
        .collect()
}

struct Spec {
    problem: &'static str,
    function: &'static str,
    build: fn(&mut dyn rand::RngCore) -> Program,
}

/// `(assignments, call, output)`: assignments become the input line and
/// the main block; `call` is printed.
type Program = (Vec<(String, String)>, String, String);

fn has_pair(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(4..=7);
    let xs = distinct_ints(n, 1, 60, rng);
    let target = if rng.gen_bool(0.5) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        xs[i] + xs[j]
    } else {
        rng.gen_range(2..=120)
    };
    let found = (0..n).any(|i| (0..n).any(|j| i != j && xs[i] + xs[j] == target));
    (
        vec![("numbers".into(), py_list(&xs)), ("target".into(), target.to_string())],
        "has_pair_with_sum(numbers, target)".into(),
        py_bool(found),
    )
}

fn count_vowels(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(3..=6);
    let text = random_words(n, rng).join(" ");
    let count = text.chars().filter(|c| "aeiou".contains(*c)).count();
    (
        vec![("text".into(), format!("\"{text}\""))],
        "count_vowels(text)".into(),
        count.to_string(),
    )
}

fn second_largest(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(4..=8);
    let xs = distinct_ints(n, 1, 99, rng);
    let mut sorted = xs.clone();
    sorted.sort_unstable();
    (
        vec![("numbers".into(), py_list(&xs))],
        "second_largest(numbers)".into(),
        sorted[n - 2].to_string(),
    )
}

fn palindrome(rng: &mut dyn rand::RngCore) -> Program {
    const PALS: &[&str] = &[
        "racecar",
        "Never odd or even",
        "Was it a car or a cat I saw",
        "step on no pets",
        "level",
    ];
    let text = if rng.gen_bool(0.5) {
        PALS.choose(rng).expect("non-empty").to_string()
    } else {
        random_words(2, rng).join(" ")
    };
    let norm: Vec<char> = text
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let pal = norm.iter().eq(norm.iter().rev());
    (
        vec![("text".into(), format!("\"{text}\""))],
        "is_palindrome(text)".into(),
        py_bool(pal),
    )
}

fn running_max(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(4..=8);
    let xs: Vec<i64> = (0..n).map(|_| rng.gen_range(-20..=50)).collect();
    let mut best = i64::MIN;
    let out: Vec<i64> = xs
        .iter()
        .map(|&x| {
            best = best.max(x);
            best
        })
        .collect();
    (
        vec![("numbers".into(), py_list(&xs))],
        "running_max(numbers)".into(),
        py_list(&out),
    )
}

fn count_multiples(rng: &mut dyn rand::RngCore) -> Program {
    let n: i64 = rng.gen_range(10..=500);
    let count = (1..=n).filter(|k| k % 3 == 0 || k % 5 == 0).count();
    (
        vec![("n".into(), n.to_string())],
        "count_multiples(n)".into(),
        count.to_string(),
    )
}

fn most_frequent(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(5..=10);
    let words = random_words(n, rng);
    let mut counts = std::collections::BTreeMap::new();
    for w in &words {
        *counts.entry(*w).or_insert(0usize) += 1;
    }
    let best = *counts.values().max().expect("non-empty");
    let winner = counts
        .iter()
        .find(|(_, &c)| c == best)
        .map(|(w, _)| *w)
        .expect("non-empty");
    (
        vec![("text".into(), format!("\"{}\"", words.join(" ")))],
        "most_frequent_word(text)".into(),
        winner.to_string(),
    )
}

fn gcd_list(rng: &mut dyn rand::RngCore) -> Program {
    let base: i64 = rng.gen_range(2..=12);
    let n = rng.gen_range(3..=5);
    let xs: Vec<i64> = (0..n).map(|_| base * rng.gen_range(1..=15)).collect();
    let g = xs.iter().fold(0i64, |a, &b| num_integer::gcd(a, b));
    (
        vec![("numbers".into(), py_list(&xs))],
        "gcd_of_list(numbers)".into(),
        g.to_string(),
    )
}

fn digit_sum(rng: &mut dyn rand::RngCore) -> Program {
    let n: u64 = rng.gen_range(10..=9_999_999);
    let s: u64 = n.to_string().bytes().map(|b| u64::from(b - b'0')).sum();
    (vec![("n".into(), n.to_string())], "digit_sum(n)".into(), s.to_string())
}

fn reverse_words(rng: &mut dyn rand::RngCore) -> Program {
    let n = rng.gen_range(3..=6);
    let words = random_words(n, rng);
    let rev: Vec<&str> = words.iter().rev().copied().collect();
    (
        vec![("sentence".into(), format!("\"{}\"", words.join(" ")))],
        "reverse_words(sentence)".into(),
        rev.join(" "),
    )
}

fn fibonacci(rng: &mut dyn rand::RngCore) -> Program {
    let n: u32 = rng.gen_range(5..=40);
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    (vec![("n".into(), n.to_string())], "fibonacci(n)".into(), a.to_string())
}

const SPECS: &[Spec] = &[
    Spec {
        problem: "Given a list of integers, determine whether any two distinct numbers in the list add up to a specific target number. Return 'True' if such a pair exists, otherwise return 'False'.",
        function: "from typing import List\ndef has_pair_with_sum(numbers: List[int], target: int) -> bool:\n    seen = set()\n    for num in numbers:\n        complement = target - num\n        if complement in seen:\n            return True\n        seen.add(num)\n    return False\n",
        build: has_pair,
    },
    Spec {
        problem: "Given a lowercase string, count how many vowels (a, e, i, o, u) it contains.",
        function: "def count_vowels(text: str) -> int:\n    total = 0\n    for ch in text:\n        if ch in 'aeiou':\n            total += 1\n    return total\n",
        build: count_vowels,
    },
    Spec {
        problem: "Given a list of distinct integers, return the second largest value.",
        function: "from typing import List\ndef second_largest(numbers: List[int]) -> int:\n    unique = sorted(set(numbers))\n    return unique[-2]\n",
        build: second_largest,
    },
    Spec {
        problem: "Given a string, decide whether it reads the same forwards and backwards when only letters and digits are considered and case is ignored. Return 'True' or 'False'.",
        function: "def is_palindrome(text: str) -> bool:\n    cleaned = [ch.lower() for ch in text if ch.isalnum()]\n    return cleaned == cleaned[::-1]\n",
        build: palindrome,
    },
    Spec {
        problem: "Given a list of integers, return a list where each position holds the maximum of all values up to and including that position.",
        function: "from typing import List\ndef running_max(numbers: List[int]) -> List[int]:\n    result = []\n    best = None\n    for num in numbers:\n        if best is None or num > best:\n            best = num\n        result.append(best)\n    return result\n",
        build: running_max,
    },
    Spec {
        problem: "Given a positive integer n, count the integers from 1 to n inclusive that are divisible by 3 or by 5.",
        function: "def count_multiples(n: int) -> int:\n    return sum(1 for k in range(1, n + 1) if k % 3 == 0 or k % 5 == 0)\n",
        build: count_multiples,
    },
    Spec {
        problem: "Given a string of space-separated lowercase words, return the word that occurs most often. If several words tie, return the alphabetically smallest one.",
        function: "def most_frequent_word(text: str) -> str:\n    counts = {}\n    for word in text.split():\n        counts[word] = counts.get(word, 0) + 1\n    best = max(counts.values())\n    return min(w for w, c in counts.items() if c == best)\n",
        build: most_frequent,
    },
    Spec {
        problem: "Given a list of positive integers, return their greatest common divisor.",
        function: "import math\nfrom typing import List\ndef gcd_of_list(numbers: List[int]) -> int:\n    result = 0\n    for num in numbers:\n        result = math.gcd(result, num)\n    return result\n",
        build: gcd_list,
    },
    Spec {
        problem: "Given a non-negative integer n, return the sum of its decimal digits.",
        function: "def digit_sum(n: int) -> int:\n    total = 0\n    while n > 0:\n        total += n % 10\n        n //= 10\n    return total\n",
        build: digit_sum,
    },
    Spec {
        problem: "Given a sentence of space-separated words, return the sentence with the word order reversed.",
        function: "def reverse_words(sentence: str) -> str:\n    return ' '.join(reversed(sentence.split()))\n",
        build: reverse_words,
    },
    Spec {
        problem: "Given a non-negative integer n, return the n-th Fibonacci number, where fibonacci(0) = 0 and fibonacci(1) = 1.",
        function: "def fibonacci(n: int) -> int:\n    a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a\n",
        build: fibonacci,
    },
];

pub fn code_problem_count() -> usize {
    SPECS.len()
}

/// Problem `index` (mod the bank size) instantiated with random inputs.
pub fn code_problem<R: rand::RngCore>(index: usize, rng: &mut R) -> CodeProblem {
    let spec = &SPECS[index % SPECS.len()];
    let (assignments, call, output) = (spec.build)(rng as &mut dyn rand::RngCore);
    let input = assignments
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    let mut main: String = assignments.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    main.push_str(&format!("print({call})\n"));
    CodeProblem {
        problem: spec.problem.to_string(),
        input,
        output,
        solution: CodeSolution {
            function: spec.function.to_string(),
            main,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn passages_are_long_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = passage(90, &mut rng);
            assert!(p.split_whitespace().count() >= 90);
        }
    }

    #[test]
    fn worked_pair_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = code_problem(0, &mut rng);
        assert!(p.input.starts_with("numbers = ["));
        assert!(p.output == "True" || p.output == "False");
        assert!(p.solution.main.ends_with("print(has_pair_with_sum(numbers, target))\n"));
    }

    #[test]
    fn every_problem_instantiates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..code_problem_count() {
            let p = code_problem(i, &mut rng);
            assert!(!p.output.is_empty());
            assert!(p.solution.main.contains("print("));
        }
    }
}
