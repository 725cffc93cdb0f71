"""Canonical graph serialization, schema "mdg-1".

The on-disk form is a JSON object tree (see ir.to_document) encoded with
sorted keys and no whitespace, optionally gzip-wrapped with a zeroed
timestamp so equal graphs always produce identical bytes. File extensions:
`.mdg` plain, `.mdg.gz` compressed.
"""

from __future__ import annotations

import gzip
import json

from . import ir
from .errors import ContractError, ParseError, VersionError
from .symexpr import parse_affine, parse_range_end

__all__ = ["SCHEMA_VERSION", "serialize", "deserialize"]

SCHEMA_VERSION = "mdg-1"

_GZIP_MAGIC = b"\x1f\x8b"


def serialize(g: ir.DataflowGraph, compress: bool = False) -> bytes:
    diags = ir.validate(g)
    if diags:
        raise ContractError(
            "refusing to serialize an invalid graph: "
            + "; ".join(str(d) for d in diags[:3])
        )
    doc = ir.to_document(g)
    raw = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if compress:
        return gzip.compress(raw, mtime=0)
    return raw


def _expect(doc, key, kind, where):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"missing field '{key}' in {where}")
    val = doc[key]
    if not isinstance(val, kind):
        raise ParseError(f"field '{key}' in {where} has wrong type")
    return val


def _enum_value(enum_cls, text: str, what: str):
    for member in enum_cls:
        if member.value == text:
            return member
    raise VersionError(f"unknown {what} value '{text}'")


def _parse_memlet(doc, where) -> tuple[str, ir.Memlet]:
    conn = _expect(doc, "connector", str, where)
    container = _expect(doc, "container", str, where)
    subset = _expect(doc, "subset", list, where)
    wcr = _enum_value(ir.Wcr, _expect(doc, "wcr", str, where), "wcr")
    return conn, ir.Memlet(
        container=container,
        subset=tuple(parse_affine(s) for s in subset),
        wcr=wcr,
    )


def _parse_range(doc, where) -> ir.Range:
    begin = parse_affine(_expect(doc, "begin", str, where))
    end = parse_range_end(_expect(doc, "end", str, where))
    return ir.Range(begin=begin, end=end)


def _parse_node(doc, g: ir.DataflowGraph) -> ir.Node:
    kind = _expect(doc, "kind", str, "node")
    if kind == "map":
        node = ir.MapNode(
            node_id=g.new_id(),
            params=tuple(_expect(doc, "params", list, "map")),
            ranges=tuple(
                _parse_range(r, "map range") for r in _expect(doc, "ranges", list, "map")
            ),
            schedule=_enum_value(
                ir.Schedule, _expect(doc, "schedule", str, "map"), "schedule"
            ),
        )
        node.body = [_parse_node(n, g) for n in _expect(doc, "body", list, "map")]
        return node
    if kind == "for":
        node = ir.ForNode(
            node_id=g.new_id(),
            param=_expect(doc, "param", str, "for"),
            range=_parse_range(_expect(doc, "range", dict, "for"), "loop range"),
        )
        node.body = [_parse_node(n, g) for n in _expect(doc, "body", list, "for")]
        return node
    if kind == "tasklet":
        ins = dict(
            _parse_memlet(m, "tasklet input")
            for m in _expect(doc, "ins", list, "tasklet")
        )
        outs = dict(
            _parse_memlet(m, "tasklet output")
            for m in _expect(doc, "outs", list, "tasklet")
        )
        return ir.Tasklet(
            node_id=g.new_id(),
            ins=ins,
            outs=outs,
            body=_expect(doc, "body", str, "tasklet"),
        )
    if kind == "copy":
        offset = _expect(doc, "offset", list, "copy")
        return ir.CopyNode(
            node_id=g.new_id(),
            src=_expect(doc, "src", str, "copy"),
            dst=_expect(doc, "dst", str, "copy"),
            src_offset=tuple(
                None if e is None else parse_affine(e) for e in offset
            ),
        )
    raise VersionError(f"unknown node kind '{kind}'")


def deserialize(b: bytes) -> ir.DataflowGraph:
    if not isinstance(b, (bytes, bytearray)):
        raise ParseError("expected bytes")
    data = bytes(b)
    if data[:2] == _GZIP_MAGIC:
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise ParseError(f"corrupt gzip stream: {exc}") from exc
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError("document is not valid UTF-8", offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, offset=exc.pos) from exc

    version = _expect(doc, "version", str, "document")
    if version != SCHEMA_VERSION:
        raise VersionError(
            f"unsupported schema version '{version}', expected '{SCHEMA_VERSION}'"
        )

    g = ir.DataflowGraph(name=_expect(doc, "name", str, "document"))
    g.symbols = set(_expect(doc, "symbols", list, "document"))
    for cdoc in _expect(doc, "containers", list, "document"):
        g.add_container(
            _expect(cdoc, "name", str, "container"),
            [parse_affine(s) for s in _expect(cdoc, "shape", list, "container")],
            storage=_enum_value(
                ir.Storage, _expect(cdoc, "storage", str, "container"), "storage"
            ),
            transient=_expect(cdoc, "transient", bool, "container"),
        )
    for sdoc in _expect(doc, "states", list, "document"):
        state = ir.State(name=_expect(sdoc, "name", str, "state"))
        state.nodes = [
            _parse_node(n, g) for n in _expect(sdoc, "nodes", list, "state")
        ]
        g.states.append(state)
    return g
