"""Parser for the per-macroblock coefficient dump written by the modified decoder.

The dump is a sequence of ``Picture`` elements::

    <Picture id="0" poc="0">
      <TypeString>SLICE_TYPE_I</TypeString>
      <MacroBlock num="0">
        <Position><X>0</X><Y>0</Y></Position>
        <PredModeString>BLOCK_TYPE_I</PredModeString>
        <Coeffs><Row>0,0,0,0</Row>...</Coeffs>
      </MacroBlock>
      ...
    </Picture>

Pictures may sit under any root element, or be concatenated at top level with
no root at all (the decoder does not always emit one).
"""
import io
import logging
import math
import re
import warnings
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from typing import BinaryIO, Iterable, List, Optional, Sequence, Tuple, Union
from xml.parsers.expat import ErrorString
from xml.sax.saxutils import escape

from .errors import BoundsError, FormatError, ParseError

log = logging.getLogger(__name__)

MB_SIZE = 16
SLICE_TYPES = ("I", "P", "B")

_WRAP_OPEN = b"<CoeffDump>"
_WRAP_CLOSE = b"</CoeffDump>"
_XML_DECL = re.compile(rb"^\s*<\?xml[^>]*\?>")
_CHUNK = 1 << 20

Matrix = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class MacroblockRecord:
    index: int
    x: int
    y: int
    pred_mode: str
    coeffs: Tuple[Matrix, ...]

    def has_ac(self) -> bool:
        """True if any coefficient other than the (0, 0) DC term is nonzero."""
        for matrix in self.coeffs:
            for r, row in enumerate(matrix):
                for c, v in enumerate(row):
                    if v and (r or c):
                        return True
        return False


@dataclass(frozen=True)
class FrameCoeffs:
    picture_id: int
    poc: int
    slice_type: str
    macroblocks: Tuple[MacroblockRecord, ...]


def grid_size(width: int, height: int) -> Tuple[int, int]:
    """(rows, cols) of the macroblock grid covering a width x height frame."""
    return math.ceil(height / MB_SIZE), math.ceil(width / MB_SIZE)


def _read_all(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return fh.read()
    if hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def _byte_offset(parts: Sequence[bytes], line: int, column: int) -> int:
    """Convert an expat (line, column) over the concatenated parts to a byte offset."""
    data = b"".join(parts)
    pos = 0
    for _ in range(line - 1):
        nl = data.find(b"\n", pos)
        if nl < 0:
            return len(data)
        pos = nl + 1
    return pos + column


def _parse_slice_type(text: Optional[str], picture_id) -> str:
    value = (text or "").strip().upper()
    if value.startswith("SLICE_TYPE_"):
        value = value[len("SLICE_TYPE_"):]
    if value not in SLICE_TYPES:
        raise FormatError(f"Picture {picture_id}: unknown slice type {text!r}")
    return value


def _parse_int(text: Optional[str], what: str) -> int:
    try:
        return int((text or "").strip(), 10)
    except ValueError:
        raise FormatError(f"{what}: expected a base-10 integer, got {text!r}") from None


def _parse_macroblock(elem: ET.Element, picture_id) -> MacroblockRecord:
    num_attr = elem.get("num")
    where = f"Picture {picture_id}, MacroBlock {num_attr}"
    num = _parse_int(num_attr, where + " num")
    if num < 0:
        raise FormatError(f"{where}: negative num")
    pos = elem.find("Position")
    if pos is None:
        raise FormatError(f"{where}: missing Position")
    x = _parse_int(pos.findtext("X"), where + " Position/X")
    y = _parse_int(pos.findtext("Y"), where + " Position/Y")
    pred = (elem.findtext("PredModeString") or "").strip()

    matrices = []
    for coeffs in elem.iter("Coeffs"):
        rows = []
        for row in coeffs.iter("Row"):
            tokens = (row.text or "").split(",")
            try:
                values = tuple(int(t.strip(), 10) for t in tokens)
            except ValueError:
                raise FormatError(f"{where}: non-integer token in Row {row.text!r}") from None
            rows.append(values)
        if not rows:
            continue
        if len({len(r) for r in rows}) != 1:
            raise FormatError(f"{where}: Coeffs rows have unequal lengths")
        matrices.append(tuple(rows))
    return MacroblockRecord(num, x, y, pred, tuple(matrices))


def _finish_picture(elem: ET.Element, mbs, width, height, strict) -> FrameCoeffs:
    pid_attr = elem.get("id")
    picture_id = _parse_int(pid_attr, "Picture id")
    poc = _parse_int(elem.get("poc", "0"), f"Picture {picture_id} poc")
    slice_type = _parse_slice_type(elem.findtext("TypeString"), picture_id)

    if width is not None and height is not None:
        rows, cols = grid_size(width, height)
        seen = set()
        for mb in mbs:
            if mb.x % MB_SIZE or mb.y % MB_SIZE:
                raise BoundsError(
                    f"Picture {picture_id}, MacroBlock {mb.index}: position ({mb.x},{mb.y}) "
                    f"is not on the {MB_SIZE}-pixel grid")
            if not (0 <= mb.x < width and 0 <= mb.y < height):
                raise BoundsError(
                    f"Picture {picture_id}, MacroBlock {mb.index}: position ({mb.x},{mb.y}) "
                    f"outside {width}x{height} frame")
            key = (mb.y // MB_SIZE, mb.x // MB_SIZE)
            if key in seen:
                raise FormatError(
                    f"Picture {picture_id}: duplicate macroblock at ({mb.x},{mb.y})")
            seen.add(key)
        expected = rows * cols
        if len(mbs) != expected:
            msg = (f"Picture {picture_id}: {len(mbs)} macroblocks, "
                   f"expected {expected} for {width}x{height}")
            if strict:
                raise BoundsError(msg)
            warnings.warn(msg + "; padding missing macroblocks as dead", stacklevel=4)
            pads = [MacroblockRecord(r * cols + c, c * MB_SIZE, r * MB_SIZE, "PADDED", ())
                    for r in range(rows) for c in range(cols) if (r, c) not in seen]
            mbs = mbs + pads
    return FrameCoeffs(picture_id, poc, slice_type, tuple(mbs))


def parse_coeff_dump(source: Union[bytes, str, BinaryIO],
                     expected_width: Optional[int] = None,
                     expected_height: Optional[int] = None,
                     strict: bool = True) -> List[FrameCoeffs]:
    """Parse a coefficient dump into one :class:`FrameCoeffs` per ``Picture``.

    :param source: bytes, a path, or a binary file object (UTF-8)
    :param expected_width: frame width in pixels; enables bounds and grid checks
    :param expected_height: frame height in pixels
    :param strict: if False, a short macroblock count only warns and the missing
        macroblocks are padded as dead (no coefficients)
    :return: frames in document order
    """
    data = _read_all(source)
    if data.startswith(b"\xef\xbb\xbf"):
        data = data[3:]
        skipped = 3
    else:
        skipped = 0
    decl = _XML_DECL.match(data)
    if decl:
        skipped += decl.end()
        data = data[decl.end():]
    parts = (_WRAP_OPEN, data, _WRAP_CLOSE)

    parser = ET.XMLPullParser(events=("start", "end"))
    frames: List[FrameCoeffs] = []
    mbs: List[MacroblockRecord] = []
    depth = 0
    picture_depth = None
    picture_id = None
    try:
        for part in parts:
            for start in range(0, len(part), _CHUNK):
                parser.feed(part[start:start + _CHUNK])
                for event, elem in parser.read_events():
                    if event == "start":
                        depth += 1
                        if elem.tag == "Picture" and picture_depth is None:
                            picture_depth = depth
                            picture_id = elem.get("id")
                            mbs = []
                        continue
                    depth -= 1
                    if elem.tag == "MacroBlock" and picture_depth is not None:
                        mbs.append(_parse_macroblock(elem, picture_id))
                        elem.clear()
                    elif elem.tag == "Picture" and picture_depth == depth + 1:
                        frames.append(_finish_picture(elem, mbs, expected_width,
                                                      expected_height, strict))
                        picture_depth = None
                        elem.clear()
        parser.close()
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(parts, line, column) - len(_WRAP_OPEN) + skipped
        raise ParseError(f"malformed XML: {ErrorString(exc.code)}", max(offset, 0)) from None
    log.debug("parsed %d pictures", len(frames))
    return frames


def slice_type_histogram(frames: Iterable[FrameCoeffs]) -> dict:
    counts = Counter(f.slice_type for f in frames)
    return {t: counts.get(t, 0) for t in SLICE_TYPES}


def to_xml(frames: Iterable[FrameCoeffs]) -> bytes:
    """Serialize frames back to the dump schema (inverse of :func:`parse_coeff_dump`)."""
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n<CoeffDump>\n')
    for f in frames:
        out.write(f'<Picture id="{f.picture_id}" poc="{f.poc}">\n')
        out.write(f"  <TypeString>SLICE_TYPE_{f.slice_type}</TypeString>\n")
        for mb in f.macroblocks:
            out.write(f'  <MacroBlock num="{mb.index}">\n')
            out.write(f"    <Position><X>{mb.x}</X><Y>{mb.y}</Y></Position>\n")
            out.write(f"    <PredModeString>{escape(mb.pred_mode)}</PredModeString>\n")
            for matrix in mb.coeffs:
                out.write("    <Coeffs>\n")
                for row in matrix:
                    out.write("      <Row>" + ",".join(map(str, row)) + "</Row>\n")
                out.write("    </Coeffs>\n")
            out.write("  </MacroBlock>\n")
        out.write("</Picture>\n")
    out.write("</CoeffDump>\n")
    return out.getvalue().encode("utf-8")
