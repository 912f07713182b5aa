"""Builder for the malformed-container corpus.

Constructs .wtif bytes from scratch (independent of the package's own
writer) so each case controls exactly one structural defect.
"""

from __future__ import annotations

import struct

TAGS = {
    "width": 256,
    "height": 257,
    "bits": 258,
    "compression": 259,
    "photometric": 262,
    "tile_width": 322,
    "tile_height": 323,
    "tile_offsets": 324,
    "tile_counts": 325,
}
SHORT, LONG = 3, 4


class TiffBuilder:
    def __init__(self, order: bytes = b"II", magic: int = 42):
        self.buf = bytearray(struct.pack("<2sHI", order, magic, 0))
        self.chain_pos = 4

    def pad(self):
        if len(self.buf) % 2:
            self.buf += b"\x00"

    def data(self, blob: bytes) -> int:
        self.pad()
        pos = len(self.buf)
        self.buf += blob
        return pos

    def array(self, values, fmt: str) -> int:
        return self.data(struct.pack(f"<{len(values)}{fmt}", *values))

    def ifd(self, entries, next_off: int | None = None, declared_count=None,
            link: bool = True) -> int:
        """entries: [(tag, type, count, 4-byte value field)]"""
        self.pad()
        pos = len(self.buf)
        if link:
            struct.pack_into("<I", self.buf, self.chain_pos, pos)
        self.buf += struct.pack("<H", declared_count if declared_count is not None
                                else len(entries))
        for tag, typ, count, value in entries:
            self.buf += struct.pack("<HHI", tag, typ, count) + value
        self.chain_pos = len(self.buf)
        self.buf += struct.pack("<I", 0 if next_off is None else next_off)
        return pos

    def bytes(self) -> bytes:
        return bytes(self.buf)


def _long(v: int) -> bytes:
    return struct.pack("<I", v)


def _short(v: int) -> bytes:
    return struct.pack("<HH", v, 0)


def standard_entries(b: TiffBuilder, *, width=32, height=32, tile=16,
                     compression=1, photometric=2, bits=(8, 8, 8),
                     tile_bytes=None, n_tiles=None, offsets=None, counts=None):
    """Entries for one uncompressed RGB level, tile data included."""
    across = -(-width // tile)
    down = -(-height // tile)
    n = n_tiles if n_tiles is not None else across * down
    size = tile_bytes if tile_bytes is not None else tile * tile * 3
    if offsets is None:
        offsets = [b.data(bytes([i % 251]) * size) for i in range(n)]
    if counts is None:
        counts = [size] * n
    bits_off = b.array(bits, "H")
    entries = [
        (TAGS["width"], LONG, 1, _long(width)),
        (TAGS["height"], LONG, 1, _long(height)),
        (TAGS["bits"], SHORT, len(bits), _long(bits_off)),
        (TAGS["compression"], SHORT, 1, _short(compression)),
        (TAGS["photometric"], SHORT, 1, _short(photometric)),
        (TAGS["tile_width"], LONG, 1, _long(tile)),
        (TAGS["tile_height"], LONG, 1, _long(tile)),
    ]
    if len(offsets) == 1:
        entries.append((TAGS["tile_offsets"], LONG, 1, _long(offsets[0])))
    else:
        entries.append((TAGS["tile_offsets"], LONG, len(offsets),
                        _long(b.array(offsets, "I"))))
    if len(counts) == 1:
        entries.append((TAGS["tile_counts"], LONG, 1, _long(counts[0])))
    else:
        entries.append((TAGS["tile_counts"], LONG, len(counts),
                        _long(b.array(counts, "I"))))
    return entries


def valid_single_level(**kwargs) -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b, **kwargs))
    return b.bytes()


def _drop_tag(tag_name: str) -> bytes:
    b = TiffBuilder()
    entries = [e for e in standard_entries(b) if e[0] != TAGS[tag_name]]
    b.ifd(entries)
    return b.bytes()


def _case_empty() -> bytes:
    return b""


def _case_truncated_header() -> bytes:
    return valid_single_level()[:4]


def _case_big_endian() -> bytes:
    return TiffBuilder(order=b"MM").bytes()


def _case_bad_magic() -> bytes:
    return TiffBuilder(magic=43).bytes()


def _case_no_ifd() -> bytes:
    return TiffBuilder().bytes()  # first IFD offset left at 0


def _case_odd_ifd_offset() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b))
    struct.pack_into("<I", b.buf, 4, struct.unpack_from("<I", b.buf, 4)[0] + 1)
    return b.bytes()


def _case_ifd_beyond_eof() -> bytes:
    b = TiffBuilder()
    struct.pack_into("<I", b.buf, 4, 1 << 20)
    return b.bytes()


def _case_zero_entries() -> bytes:
    b = TiffBuilder()
    b.ifd([], declared_count=0)
    return b.bytes()


def _case_truncated_ifd() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b), declared_count=5000)
    return b.bytes()


def _case_bad_entry_type() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries[0] = (TAGS["width"], 1, 1, _long(32))  # BYTE type
    b.ifd(entries)
    return b.bytes()


def _case_unsorted_tags() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries[0], entries[1] = entries[1], entries[0]
    b.ifd(entries)
    return b.bytes()


def _case_bits_16() -> bytes:
    return valid_single_level(bits=(16, 16, 16))


def _case_bits_count_1() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries = [e for e in entries if e[0] != TAGS["bits"]]
    entries.insert(2, (TAGS["bits"], SHORT, 1, _short(8)))
    b.ifd(entries)
    return b.bytes()


def _case_lzw() -> bytes:
    return valid_single_level(compression=5)


def _case_grayscale() -> bytes:
    return valid_single_level(photometric=1)


def _case_zero_width() -> bytes:
    return valid_single_level(width=0, n_tiles=1)


def _case_tiny_tile() -> bytes:
    return valid_single_level(tile=8)


def _case_tile_count_mismatch() -> bytes:
    # 64x64 at tile 16 needs 16 tiles; provide 4
    return valid_single_level(width=64, height=64, n_tiles=4)


def _case_tile_beyond_eof() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b, width=16, height=16, offsets=[1 << 20]))
    return b.bytes()


def _case_tile_bytecount_wrong() -> bytes:
    b = TiffBuilder()
    blob = b.data(b"\x00" * 100)
    b.ifd(standard_entries(b, width=16, height=16, offsets=[blob], counts=[100]))
    return b.bytes()


def _case_overlapping_tiles() -> bytes:
    b = TiffBuilder()
    blob = b.data(b"\x11" * (16 * 16 * 3))
    b.ifd(standard_entries(b, width=32, height=16, offsets=[blob, blob + 1],
                           counts=[16 * 16 * 3] * 2))
    return b.bytes()


def _case_ifd_cycle() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b))
    # point the chain back at the first IFD
    first = struct.unpack_from("<I", b.buf, 4)[0]
    struct.pack_into("<I", b.buf, b.chain_pos, first)
    return b.bytes()


def _case_growing_levels() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b, width=32, height=32))
    b.ifd(standard_entries(b, width=32, height=32))  # not <= half
    return b.bytes()


def _case_second_level_too_wide() -> bytes:
    b = TiffBuilder()
    b.ifd(standard_entries(b, width=48, height=48))
    b.ifd(standard_entries(b, width=25, height=16))  # ceil(48/2)=24 < 25
    return b.bytes()


def _case_offsets_array_beyond_eof() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b, width=32, height=32)
    entries = [e for e in entries if e[0] != TAGS["tile_offsets"]]
    entries.insert(7, (TAGS["tile_offsets"], LONG, 4, _long(1 << 20)))
    b.ifd(entries)
    return b.bytes()


def _case_scalar_with_count_2() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    arr = b.array([32, 32], "I")
    entries[0] = (TAGS["width"], LONG, 2, _long(arr))
    b.ifd(entries)
    return b.bytes()


def _case_zero_count_entry() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries[0] = (TAGS["width"], LONG, 0, _long(0))
    b.ifd(entries)
    return b.bytes()


def _case_garbage() -> bytes:
    return b"II\x2a\x00" + b"\xde\xad\xbe\xef" * 16


def _case_empty_tile_bytecount() -> bytes:
    b = TiffBuilder()
    blob = b.data(b"\x00" * (16 * 16 * 3))
    b.ifd(standard_entries(b, width=16, height=16, compression=7,
                           offsets=[blob], counts=[0]))
    return b.bytes()


def _case_huge_entry_count_value() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries[7] = (TAGS["tile_offsets"], LONG, 1 << 25, _long(8))
    b.ifd(entries)
    return b.bytes()


def _case_tile_extends_past_eof() -> bytes:
    b = TiffBuilder()
    blob = b.data(b"\x22" * 64)  # shorter than claimed
    b.ifd(standard_entries(b, width=16, height=16, offsets=[blob],
                           counts=[16 * 16 * 3]))
    return b.bytes()


def _case_bits_array_beyond_eof() -> bytes:
    b = TiffBuilder()
    entries = standard_entries(b)
    entries[2] = (TAGS["bits"], SHORT, 3, _long(1 << 20))
    b.ifd(entries)
    return b.bytes()


MALFORMED_CASES: dict[str, bytes] = {
    "empty_file": _case_empty(),
    "truncated_header": _case_truncated_header(),
    "big_endian": _case_big_endian(),
    "bad_magic": _case_bad_magic(),
    "no_ifd": _case_no_ifd(),
    "odd_ifd_offset": _case_odd_ifd_offset(),
    "ifd_beyond_eof": _case_ifd_beyond_eof(),
    "zero_entries": _case_zero_entries(),
    "truncated_ifd": _case_truncated_ifd(),
    "bad_entry_type": _case_bad_entry_type(),
    "unsorted_tags": _case_unsorted_tags(),
    "missing_width": _drop_tag("width"),
    "missing_height": _drop_tag("height"),
    "missing_bits": _drop_tag("bits"),
    "missing_compression": _drop_tag("compression"),
    "missing_photometric": _drop_tag("photometric"),
    "missing_tile_width": _drop_tag("tile_width"),
    "missing_tile_height": _drop_tag("tile_height"),
    "missing_tile_offsets": _drop_tag("tile_offsets"),
    "missing_tile_counts": _drop_tag("tile_counts"),
    "bits_16": _case_bits_16(),
    "bits_count_1": _case_bits_count_1(),
    "lzw_compression": _case_lzw(),
    "grayscale_photometric": _case_grayscale(),
    "zero_width": _case_zero_width(),
    "tiny_tile": _case_tiny_tile(),
    "tile_count_mismatch": _case_tile_count_mismatch(),
    "tile_beyond_eof": _case_tile_beyond_eof(),
    "tile_bytecount_wrong": _case_tile_bytecount_wrong(),
    "overlapping_tiles": _case_overlapping_tiles(),
    "ifd_cycle": _case_ifd_cycle(),
    "growing_levels": _case_growing_levels(),
    "second_level_too_wide": _case_second_level_too_wide(),
    "offsets_array_beyond_eof": _case_offsets_array_beyond_eof(),
    "scalar_with_count_2": _case_scalar_with_count_2(),
    "zero_count_entry": _case_zero_count_entry(),
    "garbage_after_header": _case_garbage(),
    "empty_tile_bytecount": _case_empty_tile_bytecount(),
    "huge_array_count": _case_huge_entry_count_value(),
    "tile_extends_past_eof": _case_tile_extends_past_eof(),
    "bits_array_beyond_eof": _case_bits_array_beyond_eof(),
}
