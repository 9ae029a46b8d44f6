use protodsl::ingest::{
    build_corpus, classify_flow_unit, extract_instance_action, extract_opcode, ClientError, ExtractionClient,
    ExtractionRequest, ExtractionResponse, IngestError, IngestOptions, OpcodeLexicon, RuleBasedClient, Task,
};
use protodsl::{ComponentType, DomainId, ProtocolDoc, SourceRef};

const SENTENCES: &str = include_str!("fixtures/opcode_sentences.tsv");

fn labeled() -> Vec<(&'static str, Option<&'static str>)> {
    SENTENCES
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (s, label) = l.split_once('\t').expect("tab-separated fixture line");
            (s, (label != "-").then_some(label))
        })
        .collect()
}

#[test]
fn hand_labeled_opcodes() {
    let lex = OpcodeLexicon::default();
    let cases = labeled();
    assert_eq!(cases.len(), 50);
    let wrong: Vec<String> = cases
        .iter()
        .filter_map(|(s, want)| {
            let got = extract_opcode(s, &lex);
            (got.as_deref() != *want).then(|| format!("{s:?}: got {got:?}, want {want:?}"))
        })
        .collect();
    assert!(wrong.is_empty(), "{} of 50 mislabeled:\n{}", wrong.len(), wrong.join("\n"));
}

struct Labels(Option<&'static str>, Option<&'static str>);

impl ExtractionClient for Labels {
    fn call(&self, request: &ExtractionRequest) -> Result<ExtractionResponse, ClientError> {
        assert_eq!(request.task, Task::ClassifyComponent);
        Ok(ExtractionResponse { result: serde_json::json!({"phase": self.0, "type": self.1}), confidence: 1.0 })
    }
}

#[test]
fn phase_label_is_preferred() {
    assert_eq!(classify_flow_unit("ethanol", &Labels(Some("Liquid"), Some("ChemicalCompound"))).unwrap(), Some(ComponentType::Liquid));
    assert_eq!(
        classify_flow_unit("cells", &Labels(None, Some("BiologicalMaterial"))).unwrap(),
        Some(ComponentType::BiologicalMaterial)
    );
    assert_eq!(classify_flow_unit("thing", &Labels(None, None)).unwrap(), None);
}

struct TimesOut;

impl ExtractionClient for TimesOut {
    fn call(&self, _: &ExtractionRequest) -> Result<ExtractionResponse, ClientError> {
        Err(ClientError::Failed("timeout".into()))
    }
}

fn doc(id: &str, steps: &[&str]) -> ProtocolDoc {
    ProtocolDoc {
        id: id.into(),
        title: "t".into(),
        description: "d".into(),
        domain: DomainId::new("Genetics").unwrap(),
        steps: steps.iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn client_timeout_is_an_extraction_error() {
    let source = SourceRef { protocol: "p".into(), step: 0 };
    let err = extract_instance_action("Centrifuge the tubes at 15,000 x g for 20 minutes", source.clone(), &TimesOut).unwrap_err();
    assert_eq!(err.source_ref, source);
    assert!(err.message.contains("timeout"));
}

#[test]
fn empty_doc_list_rejected() {
    assert!(matches!(build_corpus(Vec::new(), &RuleBasedClient::default(), &IngestOptions::default()), Err(IngestError::EmptyCorpus)));
}

#[test]
fn rule_based_corpus_links_lysate() {
    let docs = vec![doc("p1", &["Lyse the cells with lysis buffer to obtain the lysate.", "Centrifuge the lysate at 12,000 x g for 10 min."])];
    let corpus = build_corpus(docs, &RuleBasedClient::default(), &IngestOptions::default()).unwrap();
    let ops: Vec<&str> = corpus.actions.iter().map(|a| a.opcode.as_str()).collect();
    assert_eq!(ops, vec!["lyse", "centrifuge"]);
    let lysate = corpus.records().find(|r| r.unit.component == "lysate").expect("lysate record");
    assert_eq!(lysate.pred.as_deref(), Some("lyse"));
    assert_eq!(lysate.succ.as_deref(), Some("centrifuge"));
}
