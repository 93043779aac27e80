use std::fs;
use std::sync::OnceLock;

use proptest::prelude::*;
use tempfile::TempDir;

use splinter::corpus::frequency_table_from_text;
use splinter::reduction::train_reduction_map;
use splinter::splinterer::{decode_word, encode_word, splinter_text, unsplinter_text};
use splinter::synthetic;
use splinter::tokenizer::train_bpe;
use splinter::{
    BeamConfig, BpeConfig, CompositeAlphabet, CompositeBlock, Error, IndexConvention, LanguageProfile,
    ReductionMap, TokenizedCorpus, TokenizerModel, WordFrequencyTable,
};

fn trained() -> (
    LanguageProfile,
    WordFrequencyTable,
    ReductionMap,
    CompositeAlphabet,
) {
    let he = LanguageProfile::hebrew();
    let table = frequency_table_from_text(&synthetic::suffix_heavy_corpus(), &he).unwrap();
    let map = train_reduction_map(&table, &he, IndexConvention::Signed).unwrap();
    let alphabet = CompositeAlphabet::from_map(&map, &he, CompositeBlock::default()).unwrap();
    (he, table, map, alphabet)
}

#[test]
fn artifacts_survive_save_and_load() {
    let dir = TempDir::new().unwrap();
    let (he, table, map, alphabet) = trained();

    let freq = dir.path().join("freq.tsv");
    table.save(&freq, &he.name).unwrap();
    assert_eq!(WordFrequencyTable::load(&freq).unwrap(), table);

    let map_path = dir.path().join("map.tsv");
    map.save(&map_path).unwrap();
    assert_eq!(ReductionMap::load(&map_path).unwrap(), map);

    let alpha_path = dir.path().join("alphabet.tsv");
    alphabet.save(&alpha_path).unwrap();
    assert_eq!(CompositeAlphabet::load(&alpha_path).unwrap(), alphabet);

    let text = synthetic::templatic_corpus();
    let model = train_bpe(&text, &BpeConfig::new(200)).unwrap();
    let model_path = dir.path().join("m.bpe");
    model.save(&model_path).unwrap();
    assert_eq!(TokenizerModel::load(&model_path).unwrap(), model);

    let tokens = model.tokenize_lines(&text, &he.delimiters);
    let tok_path = dir.path().join("t.tok");
    tokens.save(&tok_path).unwrap();
    assert_eq!(TokenizedCorpus::load(&tok_path).unwrap(), tokens);
}

#[test]
fn edited_map_fails_checksum() {
    let dir = TempDir::new().unwrap();
    let (_, _, map, _) = trained();
    let path = dir.path().join("map.tsv");
    map.save(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    let edited = text.replace(last, &format!("{last}0"));
    fs::write(&path, edited).unwrap();
    assert!(matches!(ReductionMap::load(&path), Err(Error::Format { .. })));
}

#[test]
fn missing_file_is_io_error() {
    let err = ReductionMap::load("/nonexistent/map.tsv").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn signed_alphabet_is_smaller_on_suffix_heavy_corpus() {
    let (he, table, map, alphabet) = trained();
    let unsigned = train_reduction_map(&table, &he, IndexConvention::Unsigned).unwrap();
    let ua = CompositeAlphabet::from_map(&unsigned, &he, CompositeBlock::default()).unwrap();
    assert_eq!(map.len(), unsigned.len());
    assert!(alphabet.composite_count() < ua.composite_count());
}

#[test]
fn cjk_block_round_trips() {
    let (he, _, map, _) = trained();
    let alphabet = CompositeAlphabet::from_map(&map, &he, CompositeBlock::cjk()).unwrap();
    let text = synthetic::mixed_script_text(20_000, 9);
    let (out, _) = splinter_text(&text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
    assert_eq!(unsplinter_text(&out, &alphabet, &he).unwrap(), text);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn any_hebrew_word_decodes_back(word in "[\u{05D0}-\u{05EA}]{1,12}", b in 1usize..5, d in 1usize..5) {
        static MAP: OnceLock<ReductionMap> = OnceLock::new();
        let map = MAP.get_or_init(|| trained().2);
        let sw = encode_word(&word, map, BeamConfig::new(b, d));
        prop_assert!(sw.core.chars().count() >= map.min_core_length().min(word.chars().count()));
        prop_assert_eq!(decode_word(&sw).unwrap(), word);
    }
}
