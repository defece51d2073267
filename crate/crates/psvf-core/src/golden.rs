//! Deterministic surrogate survey fixture.
//!
//! Builds a full-size survey dataset (200 songs × 6 segments, 128
//! participants pre-filter) whose post-filter counts and subgroup statistics
//! reproduce the published survey's reference values: 126 participants, 7258
//! valid responses, and every AC / Unsure cell within half a percentage
//! point. Used by the acceptance suite when the released survey files are
//! not on disk, and useful as a large, fully-characterized test input.
//!
//! The construction is exact, not sampled: every response is planned so that
//! each cross-tab cell has a known aligned/misaligned count and each singer
//! subgroup a known count of neutral-mean segments.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use crate::dataset::{
    Gender, Language, ParticipantAgeGroup, ParticipantMeta, Response, SegmentMeta, SingerAgeGroup,
    SingerSex, SurveyDataset,
};

/// Valid responses after filtering.
pub const VALID_RESPONSES: usize = 7258;
/// Participants after filtering.
pub const VALID_PARTICIPANTS: usize = 126;
/// Segments (200 songs × 6).
pub const N_SEGMENTS: usize = 1200;

// Participant-subgroup columns as bits: female, male, three reported age
// groups, five languages. 65+ participants and unspecified genders carry no
// bit and so never constrain a panel.
const COL_F: u16 = 1 << 0;
const COL_M: u16 = 1 << 1;
const COL_A20: u16 = 1 << 2;
const COL_A35: u16 = 1 << 3;
const COL_A50: u16 = 1 << 4;
const COL_FR: u16 = 1 << 5;
const COL_EN: u16 = 1 << 6;
const COL_SP: u16 = 1 << 7;
const COL_MAN: u16 = 1 << 8;
const COL_GE: u16 = 1 << 9;
const N_COLS: usize = 10;

// Misaligned-segment counts per (participant column, singer row), plus the
// within-row index window where those segments sit. Window starts are chosen
// so no two columns of the same block ever mark the same segment.
const SEX_COL_START: [usize; 2] = [0, 103];
const SEX_MISS: [[usize; 2]; 2] = [
    [103, 20], // female participants × (female, male) singers
    [73, 22],  // male participants
];
const AGE_COL_START: [usize; 3] = [100, 160, 220];
const AGE_MISS: [[usize; 4]; 3] = [
    [11, 9, 37, 22],  // 20-34 participants × singer age rows
    [20, 7, 53, 38],  // 35-49
    [38, 15, 57, 55], // 50-65
];
const LANG_COL_START: [usize; 5] = [0, 48, 96, 144, 192];
const LANG_MISS: [[usize; 5]; 5] = [
    [34, 19, 24, 6, 18],  // fr participants × (fr,en,sp,man,ge) tracks
    [29, 16, 25, 5, 13],  // en
    [25, 17, 46, 10, 19], // sp
    [36, 21, 30, 19, 24], // man
    [34, 16, 34, 14, 13], // ge
];

// Neutral-mean ("unsure") segment counts per (sex, age, language) stratum of
// 30 segments. Row/column sums give 39+12 by sex, 8+2+28+13 by singer age,
// 18+6+14+2+11 by language — one consistent set of 51 segments.
const UNSURE_STRATA: [[[usize; 5]; 4]; 2] = [
    [
        [6, 0, 0, 0, 0],
        [1, 0, 0, 0, 0],
        [11, 6, 5, 0, 0],
        [0, 0, 9, 1, 0],
    ],
    [
        [0, 0, 0, 1, 1],
        [0, 0, 0, 0, 1],
        [0, 0, 0, 0, 6],
        [0, 0, 0, 0, 3],
    ],
];

struct RaterSpec {
    gender: Gender,
    age: ParticipantAgeGroup,
    langs: &'static [Language],
}

const fn rater(gender: Gender, age: ParticipantAgeGroup, langs: &'static [Language]) -> RaterSpec {
    RaterSpec { gender, age, langs }
}

use Gender::{Female as GF, Male as GM};
use Language::{En, Fr, Ge, Man, Sp};
use ParticipantAgeGroup::{A20_34 as P20, A35_49 as P35, A50_65 as P50};

/// The 124 active raters: 4 aged 50-65, 24 aged 35-49, 96 aged 20-34, with
/// language sets summing to 67 fr / 108 en / 15 sp / 24 man / 8 ge and
/// genders summing to 52 female / 72 male.
fn rater_specs() -> Vec<RaterSpec> {
    let mut specs = Vec::with_capacity(124);
    // Age 50-65: both genders, all five languages across the four, and for
    // either gender a member avoiding any single language.
    specs.push(rater(GF, P50, &[Fr, En]));
    specs.push(rater(GM, P50, &[Sp, Man]));
    specs.push(rater(GF, P50, &[Ge]));
    specs.push(rater(GM, P50, &[En]));
    // Age 35-49: 24 raters, gender-alternating within each language pattern.
    for i in 0..12 {
        specs.push(rater(if i % 2 == 0 { GF } else { GM }, P35, &[Fr, En]));
    }
    for i in 0..4 {
        specs.push(rater(if i % 2 == 0 { GF } else { GM }, P35, &[En, Sp]));
    }
    for i in 0..4 {
        specs.push(rater(if i % 2 == 0 { GF } else { GM }, P35, &[En, Man]));
    }
    for i in 0..2 {
        specs.push(rater(if i % 2 == 0 { GF } else { GM }, P35, &[En, Ge]));
    }
    for i in 0..2 {
        specs.push(rater(if i % 2 == 0 { GF } else { GM }, P35, &[Fr, Man]));
    }
    // Age 20-34: single-language raters of both genders...
    for lang in [Fr, En, Sp, Man, Ge] {
        for g in [GF, GM] {
            specs.push(rater(g, P20, match lang {
                Fr => &[Fr],
                En => &[En],
                Sp => &[Sp],
                Man => &[Man],
                Ge => &[Ge],
            }));
        }
    }
    // ...then the bulk: 86 raters, 33 female then 53 male.
    for i in 0..86usize {
        let gender = if i < 33 { GF } else { GM };
        let langs: &'static [Language] = match i {
            0..=49 => &[Fr, En],
            50..=57 => &[En, Sp],
            58..=72 => &[En, Man],
            73..=75 => &[En, Ge],
            76..=81 => &[En],
            _ => &[],
        };
        specs.push(rater(gender, P20, langs));
    }
    specs
}

fn col_mask(spec: &RaterSpec) -> u16 {
    let mut m = match spec.gender {
        Gender::Female => COL_F,
        Gender::Male => COL_M,
        Gender::Other => 0,
    };
    m |= match spec.age {
        ParticipantAgeGroup::A20_34 => COL_A20,
        ParticipantAgeGroup::A35_49 => COL_A35,
        ParticipantAgeGroup::A50_65 => COL_A50,
        ParticipantAgeGroup::A65Plus => 0,
    };
    for lang in spec.langs {
        m |= match lang {
            Language::Fr => COL_FR,
            Language::En => COL_EN,
            Language::Sp => COL_SP,
            Language::Man => COL_MAN,
            Language::Ge => COL_GE,
        };
    }
    m
}

/// (sex, age, lang, rep) of a song index; songs are laid out
/// sex-major, then age, then language, then 5 repetitions.
fn song_coords(song: usize) -> (usize, usize, usize, usize) {
    let sex = song / 100;
    let rem = song % 100;
    (sex, rem / 25, (rem % 25) / 5, rem % 5)
}

/// Participant-column misalignment set for one segment.
fn misaligned_cols(song: usize, k: usize) -> u16 {
    let (sex, age, lang, rep) = song_coords(song);
    let sex_rank = (song % 100) * 6 + k;
    let age_rank = sex * 150 + ((song % 100) - age * 25) * 6 + k;
    let lang_rank = sex * 120 + (age * 5 + rep) * 6 + k;
    let hit = |start: usize, len: usize, rank: usize| rank >= start && rank < start + len;

    let mut m = 0u16;
    for (col, &start) in SEX_COL_START.iter().enumerate() {
        if hit(start, SEX_MISS[col][sex], sex_rank) {
            m |= if col == 0 { COL_F } else { COL_M };
        }
    }
    for (col, &start) in AGE_COL_START.iter().enumerate() {
        if hit(start, AGE_MISS[col][age], age_rank) {
            m |= COL_A20 << col;
        }
    }
    for (col, &start) in LANG_COL_START.iter().enumerate() {
        if hit(start, LANG_MISS[col][lang], lang_rank) {
            m |= COL_FR << col;
        }
    }
    m
}

fn is_unsure(song: usize, k: usize) -> bool {
    let (sex, age, lang, rep) = song_coords(song);
    let within = rep * 6 + k;
    within >= 30 - UNSURE_STRATA[sex][age][lang]
}

/// Builds the full surrogate survey (pre-filter: 128 participants including
/// two difficulty-flagged, plus recognized-singer responses that the
/// validity filter removes).
pub fn surrogate_survey() -> SurveyDataset {
    let specs = rater_specs();
    assert_eq!(specs.len(), 124);
    let masks: Vec<u16> = specs.iter().map(col_mask).collect();

    // Membership lists per column, in participant order.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); N_COLS];
    for (i, &mask) in masks.iter().enumerate() {
        for col in 0..N_COLS {
            if mask & (1 << col) != 0 {
                members[col].push(i);
            }
        }
    }
    for (col, list) in members.iter().enumerate() {
        assert!(!list.is_empty(), "column {col} has no raters");
    }

    // Segments.
    let mut segments = Vec::with_capacity(N_SEGMENTS);
    for song in 0..200usize {
        let (sex, age, lang, _) = song_coords(song);
        for k in 0..6usize {
            segments.push(SegmentMeta {
                segment_id: format!("seg{:04}", song * 6 + k),
                song_id: format!("song{song:03}"),
                singer_sex: SingerSex::ALL[sex],
                singer_age_group: SingerAgeGroup::ALL[age],
                language: Language::ALL[lang],
                start_time: 12.0 + k as f64 * 10.0,
                duration: 3.0,
                audio_ref: None,
                stem_ref: None,
            });
        }
    }

    // Response panels. Per segment: ensure each column either has a clean
    // rater (one whose subgroups all stay aligned) or, if the column is
    // marked misaligned, at least one rater so it still counts in cell
    // denominators. Clean raters answer with the singer-sex stereotype,
    // contaminated ones answer 0, which drives exactly the marked subgroup
    // means to zero.
    let mut rotation = [0usize; N_COLS];
    let mut pad_rotation = 0usize;
    let mut panels: Vec<Vec<(usize, i8)>> = Vec::with_capacity(N_SEGMENTS);
    let mut total = 0usize;

    for song in 0..200usize {
        let (sex, _, _, _) = song_coords(song);
        let sign: i8 = if sex == 0 { 1 } else { -1 };
        for k in 0..6usize {
            let m = misaligned_cols(song, k);
            let unsure = is_unsure(song, k);
            let mut panel: Vec<usize> = vec![(song * 6 + k) % 4, 4 + (song * 6 + k) % 24];

            for col in 0..N_COLS {
                let bit = 1u16 << col;
                let wants_clean = m & bit == 0;
                let satisfied = panel.iter().any(|&p| {
                    masks[p] & bit != 0 && (!wants_clean || masks[p] & m == 0)
                });
                if satisfied {
                    continue;
                }
                let list = &members[col];
                let mut found = None;
                for step in 0..list.len() {
                    let cand = list[(rotation[col] + step) % list.len()];
                    if panel.contains(&cand) {
                        continue;
                    }
                    if wants_clean && masks[cand] & m != 0 {
                        continue;
                    }
                    found = Some((cand, step + 1));
                    break;
                }
                let (cand, advance) = found.unwrap_or_else(|| {
                    panic!("no eligible rater for column {col} with misalignment mask {m:#b}")
                });
                rotation[col] = (rotation[col] + advance) % list.len();
                panel.push(cand);
            }

            let magnitude = if unsure { 1i8 } else { 2i8 };
            let mut roles: Vec<(usize, i8)> = panel
                .iter()
                .map(|&p| {
                    if masks[p] & m == 0 {
                        (p, sign * magnitude)
                    } else {
                        (p, 0)
                    }
                })
                .collect();
            let positives = roles.iter().filter(|(_, v)| *v != 0).count();
            let zeros = roles.len() - positives;
            assert!(positives > 0, "segment without any aligned rater");
            if unsure {
                // |mean| = positives / n < 0.5 needs n >= 2 * positives + 1.
                while roles.len() < 2 * positives + 1 {
                    let cand = (0..124)
                        .map(|o| (pad_rotation + o) % 124)
                        .find(|c| !roles.iter().any(|(p, _)| p == c))
                        .expect("pad rater available");
                    pad_rotation = (cand + 1) % 124;
                    roles.push((cand, 0));
                }
            } else {
                // |mean| = 2 * positives / n >= 0.5 needs zeros <= 3 * positives.
                assert!(zeros <= 3 * positives, "zero raters would drown the mean");
            }
            roles.sort_unstable_by_key(|&(p, _)| p);
            total += roles.len();
            panels.push(roles);
        }
    }

    assert!(
        total <= VALID_RESPONSES,
        "panel construction produced {total} responses, exceeding {VALID_RESPONSES}"
    );

    // Top up to the exact valid-response count with responses that cannot
    // move any subgroup mean across zero: extra stereotypes on decided
    // segments, extra zeros on neutral ones.
    let mut seg_cursor = 0usize;
    while total < VALID_RESPONSES {
        let seg = seg_cursor % N_SEGMENTS;
        seg_cursor += 1;
        let song = seg / 6;
        let k = seg % 6;
        let m = misaligned_cols(song, k);
        let unsure = is_unsure(song, k);
        let sign: i8 = if song < 100 { 1 } else { -1 };
        let taken: Vec<usize> = panels[seg].iter().map(|&(p, _)| p).collect();
        let cand = (0..124).map(|o| (pad_rotation + o) % 124).find(|&c| {
            !taken.contains(&c) && (unsure || masks[c] & m == 0)
        });
        let Some(cand) = cand else { continue };
        pad_rotation = (cand + 1) % 124;
        let value = if unsure { 0 } else { sign * 2 };
        let pos = panels[seg].partition_point(|&(p, _)| p < cand);
        panels[seg].insert(pos, (cand, value));
        total += 1;
    }
    assert_eq!(total, VALID_RESPONSES);

    // Participants: 124 raters, two 65+ listeners whose only responses are
    // recognized-singer (all filtered), two difficulty-flagged listeners.
    let mut participants: Vec<ParticipantMeta> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| ParticipantMeta {
            participant_id: format!("p{i:03}"),
            gender: s.gender,
            age_group: s.age,
            languages: s.langs.iter().copied().collect::<BTreeSet<_>>(),
            reported_difficulty: false,
        })
        .collect();
    for (i, gender) in [(124, GF), (125, GM)] {
        participants.push(ParticipantMeta {
            participant_id: format!("p{i:03}"),
            gender,
            age_group: ParticipantAgeGroup::A65Plus,
            languages: BTreeSet::new(),
            reported_difficulty: false,
        });
    }
    for (i, gender) in [(126, GF), (127, GM)] {
        participants.push(ParticipantMeta {
            participant_id: format!("p{i:03}"),
            gender,
            age_group: ParticipantAgeGroup::A20_34,
            languages: [En].into_iter().collect(),
            reported_difficulty: true,
        });
    }

    let mut responses = Vec::with_capacity(total + 80);
    for (seg, roles) in panels.iter().enumerate() {
        for &(p, value) in roles {
            responses.push(Response {
                participant_id: format!("p{p:03}"),
                segment_id: format!("seg{seg:04}"),
                likert: value,
                recognized_singer: false,
            });
        }
    }
    // Recognized-singer answers from the 65+ listeners (filtered out).
    for (p, base) in [(124usize, 0usize), (125, 10)] {
        for seg in base..base + 10 {
            responses.push(Response {
                participant_id: format!("p{p:03}"),
                segment_id: format!("seg{seg:04}"),
                likert: 2,
                recognized_singer: true,
            });
        }
    }
    // Answers from the difficulty-flagged listeners (filtered out).
    for (p, base) in [(126usize, 600usize), (127, 660)] {
        for (i, seg) in (base..base + 30).enumerate() {
            responses.push(Response {
                participant_id: format!("p{p:03}"),
                segment_id: format!("seg{seg:04}"),
                likert: (i % 5) as i8 - 2,
                recognized_singer: i % 7 == 0,
            });
        }
    }

    SurveyDataset::new(segments, participants, responses).expect("surrogate survey is consistent")
}

/// Exact post-filter statistics of [`surrogate_survey`], in the orientation
/// of [`crate::analytics::crosstab`] cells (`[participant value][singer value]`).
#[derive(Debug, Clone)]
pub struct SurrogateExpected {
    pub participants_by_gender: [usize; 2],
    pub participants_by_age: [usize; 3],
    pub participants_by_language: [usize; 5],
    pub gender_sex_ac: [[f64; 2]; 2],
    pub age_age_ac: [[f64; 4]; 3],
    pub lang_lang_ac: [[f64; 5]; 5],
    /// Singer subgroups in report order: sex (2), age (4), language (5).
    pub unsure_percent: [f64; 11],
}

/// Derives the expected statistics from the same misalignment and
/// neutral-count tables the generator uses.
pub fn surrogate_expected() -> SurrogateExpected {
    let ac = |n: usize, m: usize| 100.0 * (n - m) as f64 / n as f64;
    let mut gender_sex_ac = [[0.0; 2]; 2];
    for col in 0..2 {
        for row in 0..2 {
            gender_sex_ac[col][row] = ac(600, SEX_MISS[col][row]);
        }
    }
    let mut age_age_ac = [[0.0; 4]; 3];
    for col in 0..3 {
        for row in 0..4 {
            age_age_ac[col][row] = ac(300, AGE_MISS[col][row]);
        }
    }
    let mut lang_lang_ac = [[0.0; 5]; 5];
    for col in 0..5 {
        for row in 0..5 {
            lang_lang_ac[col][row] = ac(240, LANG_MISS[col][row]);
        }
    }

    let mut by_sex = [0usize; 2];
    let mut by_age = [0usize; 4];
    let mut by_lang = [0usize; 5];
    for sex in 0..2 {
        for age in 0..4 {
            for lang in 0..5 {
                let x = UNSURE_STRATA[sex][age][lang];
                by_sex[sex] += x;
                by_age[age] += x;
                by_lang[lang] += x;
            }
        }
    }
    let mut unsure_percent = [0.0; 11];
    for (i, &c) in by_sex.iter().enumerate() {
        unsure_percent[i] = 100.0 * c as f64 / 600.0;
    }
    for (i, &c) in by_age.iter().enumerate() {
        unsure_percent[2 + i] = 100.0 * c as f64 / 300.0;
    }
    for (i, &c) in by_lang.iter().enumerate() {
        unsure_percent[6 + i] = 100.0 * c as f64 / 240.0;
    }

    SurrogateExpected {
        participants_by_gender: [53, 73],
        participants_by_age: [96, 24, 4],
        participants_by_language: [67, 108, 15, 24, 8],
        gender_sex_ac,
        age_age_ac,
        lang_lang_ac,
        unsure_percent,
    }
}
