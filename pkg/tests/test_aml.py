"""CAEX parsing, path resolution, and structural validation."""

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linetwin.aml import (
    CaexParseError,
    CaexStructureError,
    CaexError,
    InternalElement,
    parse_caex,
    resolve_path,
    validate_structure,
)


def test_demo_fixture_hierarchy(demo_doc):
    assert [h.name for h in demo_doc.instance_hierarchies] == ["DemoPlant"]
    first = demo_doc.instance_hierarchies[0]
    names = [e.name for e in first.elements]
    assert "Factory" in names
    factory = next(e for e in first.elements if e.name == "Factory")
    descendants = set()
    stack = list(factory.children)
    while stack:
        element = stack.pop()
        descendants.add(element.name)
        stack.extend(element.children)
    assert {"Warehouse", "ProcessingArea"} <= descendants


def test_empty_caex_file():
    doc = parse_caex('<CAEXFile FileName="empty.aml"/>')
    assert doc.file_name == "empty.aml"
    assert doc.instance_hierarchies == []
    assert doc.role_class_libs == []
    assert doc.system_unit_class_libs == []
    assert doc.interface_class_libs == []


def test_duplicate_id_is_structure_error(demo_xml):
    # Copy an element but keep its ID: the error must name both paths.
    duplicated = demo_xml.replace(
        '<InternalElement Name="MillingStation" ID="0d1f5a3e-9c41-4b8a-b6a2-100000000015" '
        'RefBaseSystemUnitPath="SimpleComponents/MachiningStation"/>',
        '<InternalElement Name="MillingStation" ID="0d1f5a3e-9c41-4b8a-b6a2-100000000015" '
        'RefBaseSystemUnitPath="SimpleComponents/MachiningStation"/>'
        '<InternalElement Name="MillingStationCopy" ID="0d1f5a3e-9c41-4b8a-b6a2-100000000015"/>',
    )
    assert duplicated != demo_xml
    with pytest.raises(CaexStructureError) as excinfo:
        parse_caex(duplicated)
    message = str(excinfo.value)
    assert "MillingStation" in message and "MillingStationCopy" in message


def test_malformed_xml_reports_position():
    with pytest.raises(CaexParseError) as excinfo:
        parse_caex("<CAEXFile><broken")
    assert re.search(r"line \d+", str(excinfo.value))


def test_missing_name_is_structure_error():
    xml = '<CAEXFile><InstanceHierarchy Name="H"><InternalElement ID="x1"/></InstanceHierarchy></CAEXFile>'
    with pytest.raises(CaexStructureError):
        parse_caex(xml)


def test_parse_is_deterministic(demo_xml):
    assert parse_caex(demo_xml) == parse_caex(demo_xml)


def test_resolve_class_path(demo_doc):
    node = resolve_path(demo_doc, "SimpleComponents/Conveyor")
    assert node is not None and node.name == "Conveyor"
    assert resolve_path(demo_doc, "SimpleComponents/PhotoSensor").name == "PhotoSensor"


def test_resolve_not_found_on_empty_document():
    doc = parse_caex("<CAEXFile/>")
    assert resolve_path(doc, "Anything/At/All") is None
    assert resolve_path(doc, "") is None


def test_resolve_nested_instance_path():
    # Oracle: the same path walked with a generic dict built from the XML.
    xml = """
    <CAEXFile>
      <InstanceHierarchy Name="H">
        <InternalElement Name="A" ID="a">
          <InternalElement Name="B" ID="b">
            <InternalElement Name="C" ID="c"/>
          </InternalElement>
        </InternalElement>
      </InstanceHierarchy>
    </CAEXFile>
    """
    import xml.etree.ElementTree as ET

    root = ET.fromstring(xml)
    node = root
    for segment in ["H", "A", "B", "C"]:
        node = next(child for child in node if child.get("Name") == segment)
    expected_id = node.get("ID")

    doc = parse_caex(xml)
    element = resolve_path(doc, "H/A/B/C")
    assert isinstance(element, InternalElement)
    assert element.id == expected_id
    assert resolve_path(doc, "H/A/B/Missing") is None


def test_validate_demo_fixture_is_clean(demo_doc):
    assert validate_structure(demo_doc).is_empty()


def test_validate_reports_dangling_link(demo_xml):
    broken = demo_xml.replace(
        '<ExternalInterface Name="ControlLink" ID="2b7c9f10-3d5e-4f6a-8b9c-200000000014" '
        'RefBaseClassPath="PlantInterfaces/IPLCSignalInterface"/>',
        "",
    )
    assert broken != demo_xml
    report = validate_structure(parse_caex(broken))
    link_errors = [f for f in report.errors if "MillAndDrill_binding" in f.element_path]
    assert len(link_errors) == 1


def test_validate_empty_document():
    assert validate_structure(parse_caex("<CAEXFile/>")).is_empty()


def test_validate_accepted_references_resolve(demo_doc):
    # Resolution soundness: a clean report means every role/class ref resolves.
    assert validate_structure(demo_doc).is_empty()
    for element in demo_doc.iter_elements():
        for role in element.role_requirements:
            assert resolve_path(demo_doc, role) is not None
        if element.ref_base_system_unit_path:
            assert resolve_path(demo_doc, element.ref_base_system_unit_path) is not None


def test_duplicate_sibling_names_reported():
    xml = """
    <CAEXFile>
      <InstanceHierarchy Name="H">
        <InternalElement Name="A" ID="a1"/>
        <InternalElement Name="A" ID="a2"/>
      </InstanceHierarchy>
    </CAEXFile>
    """
    report = validate_structure(parse_caex(xml))
    assert any("duplicate name" in f.message for f in report.errors)


def test_attribute_count_cap():
    attrs = "".join(f"<Attribute Name='a{i}'/>" for i in range(10_001))
    xml = (f"<CAEXFile><InstanceHierarchy Name='H'>"
           f"<InternalElement Name='E' ID='e1'>{attrs}</InternalElement>"
           f"</InstanceHierarchy></CAEXFile>")
    with pytest.raises(CaexStructureError) as excinfo:
        parse_caex(xml)
    assert "attributes" in str(excinfo.value)


def test_depth_cap():
    deep = "<CAEXFile><InstanceHierarchy Name='H'>"
    for i in range(70):
        deep += f"<InternalElement Name='e{i}' ID='id{i}'>"
    deep += "</InternalElement>" * 70 + "</InstanceHierarchy></CAEXFile>"
    with pytest.raises(CaexStructureError) as excinfo:
        parse_caex(deep)
    assert "depth" in str(excinfo.value)


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=2048))
def test_fuzz_arbitrary_bytes_never_crash(data):
    try:
        doc = parse_caex(data)
    except CaexError:
        return
    assert doc is not None


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=2048))
def test_fuzz_arbitrary_text_never_crash(text):
    try:
        doc = parse_caex(text)
    except CaexError:
        return
    assert doc is not None
