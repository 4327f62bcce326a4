use bomdiff::flatcompare::{extract_field, organization_delta, set_diff, FieldSelector};
use bomdiff::graphcompare::{build_graph, match_stats, merge_graphs};
use bomdiff::report::{render_json, render_table, to_dot, DiffReport, DotOptions, GraphSummary};
use bomdiff::{parse_document, BomFormat, FuzzyConfig, IngestError, IngestOptions};

const CDX: &str = r#"{
  "bomFormat": "CycloneDX",
  "specVersion": "1.5",
  "metadata": {"component": {"bom-ref": "app", "name": "app", "version": "1.0"}},
  "components": [
    {"bom-ref": "a", "name": "commons-io", "version": "2.11.0",
     "purl": "pkg:maven/commons-io/commons-io@2.11.0",
     "licenses": [{"license": {"id": "Apache-2.0"}}]},
    {"bom-ref": "b", "name": "jackson-core", "version": "2.15.0",
     "purl": "pkg:maven/com.fasterxml.jackson.core/jackson-core@2.15.0"},
    {"bom-ref": "c", "name": "rt", "version": "1",
     "purl": "pkg:maven/java.base/rt@1"}
  ],
  "dependencies": [
    {"ref": "app", "dependsOn": ["a", "b"]},
    {"ref": "b", "dependsOn": ["c"]}
  ]
}"#;

const SPDX: &str = r#"{
  "spdxVersion": "SPDX-2.3",
  "SPDXID": "SPDXRef-DOCUMENT",
  "name": "app",
  "packages": [
    {"SPDXID": "SPDXRef-app", "name": "app", "versionInfo": "1.0"},
    {"SPDXID": "SPDXRef-a", "name": "commons-io", "versionInfo": "2.11.0",
     "licenseConcluded": "NOASSERTION",
     "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
                       "referenceLocator": "pkg:maven/commons-io/commons-io@2.11.0"}]},
    {"SPDXID": "SPDXRef-b", "name": "jackson-core", "versionInfo": "2.16.0",
     "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
                       "referenceLocator": "pkg:maven/com.fasterxml.jackson.core/jackson-core@2.16.0"}]}
  ],
  "relationships": [
    {"spdxElementId": "SPDXRef-DOCUMENT", "relationshipType": "DESCRIBES", "relatedSpdxElement": "SPDXRef-app"},
    {"spdxElementId": "SPDXRef-app", "relationshipType": "DEPENDS_ON", "relatedSpdxElement": "SPDXRef-a"},
    {"spdxElementId": "SPDXRef-app", "relationshipType": "DEPENDS_ON", "relatedSpdxElement": "SPDXRef-b"}
  ]
}"#;

fn parse(text: &str, name: &str) -> bomdiff::BomDocument {
    parse_document(text.as_bytes(), name, &IngestOptions::default()).unwrap()
}

#[test]
fn cyclonedx_against_spdx() {
    let cdx = parse(CDX, "cdx.json");
    let spdx = parse(SPDX, "spdx.json");
    assert_eq!(cdx.format(), BomFormat::CycloneDxJson);
    assert_eq!(spdx.format(), BomFormat::SpdxJson);

    let names = set_diff(
        &extract_field(&cdx, FieldSelector::Name),
        &extract_field(&spdx, FieldSelector::Name),
    );
    assert_eq!(names.left_only.keys().collect::<Vec<_>>(), ["rt"]);
    assert!(names.right_only.is_empty());

    let purls = set_diff(
        &extract_field(&cdx, FieldSelector::Purl),
        &extract_field(&spdx, FieldSelector::Purl),
    );
    assert_eq!(purls.common.len(), 1);
    assert_eq!(purls.left_only.len(), 2);
    assert_eq!(purls.right_only.len(), 1);

    let licenses = extract_field(&spdx, FieldSelector::License);
    assert!(licenses.is_empty());

    let orgs = organization_delta(&cdx, &spdx, &["java."]);
    assert!(orgs.left_only.is_empty());
    assert_eq!(orgs.common.len(), 2);
}

#[test]
fn hbom_graph_report() {
    let left = "ref,name,parent,quantity\nb1,board,,1\nr1,resistor,b1,2\nu1,IN3S00A,b1,1\n";
    let right =
        "ref,name,parent,quantity\nb1,board,,1\nr1,resistor,b1,2\nu1,IN3500,b1,1\nx,extra,,1\n";
    let (l, r) = (parse(left, "l.csv"), parse(right, "r.csv"));
    let m = merge_graphs(&build_graph(&l), &build_graph(&r), &FuzzyConfig::default()).unwrap();
    let stats = match_stats(&m);
    // synthetic root, board, two resistor instances
    assert_eq!(
        (
            stats.matched,
            stats.left_only,
            stats.right_only,
            stats.fuzzy
        ),
        (4, 1, 2, 1)
    );

    let mut report = DiffReport::new("l.csv", "r.csv");
    report.graph = Some(GraphSummary::from_merged(&m));
    assert!(report.has_differences());
    let json = render_json(&report);
    let back: DiffReport = serde_json::from_str(&json).unwrap();
    assert_eq!(render_json(&back), json);
    assert!(render_table(&report).contains("Graph: matched=4 left_only=1 right_only=2 fuzzy=1"));

    let dot = to_dot(&m, &DotOptions::default());
    assert!(dot.contains(r##"label="extra", fillcolor="#ffd92f""##));
    assert!(dot.contains(r##"label="IN3S00A", fillcolor="#fa9fb5""##));
    assert!(dot.contains("dir=none"));
}

#[test]
fn parse_errors_carry_location() {
    let bad =
        r#"{"bomFormat": "CycloneDX", "specVersion": "1.5", "components": [{"bom-ref": "a"}]}"#;
    let err = parse_document(bad.as_bytes(), "x", &IngestOptions::default()).unwrap_err();
    assert!(err.to_string().contains("$.components[0]"), "{err}");

    let csv = "ref,name,quantity\na,A,1\nb,B,0\n";
    let err = parse_document(csv.as_bytes(), "x", &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, IngestError::Row { row: 3, .. }), "{err}");

    assert!(matches!(
        parse_document(b"hello", "x", &IngestOptions::default()),
        Err(IngestError::UnknownFormat)
    ));
}
