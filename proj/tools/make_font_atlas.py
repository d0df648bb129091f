#!/usr/bin/env python3
"""Build data/font8x16.glf, the banner font used by the renderer and the OCR.

Atlas layout (all fields are single bytes):
  bytes 0-3   magic "NLGF"
  byte  4     version (1)
  byte  5     cell width in pixels (8)
  byte  6     cell height in pixels (16)
  byte  7     glyph count N
  then N records of 1 + cell_height bytes:
    byte 0      character code (ASCII)
    bytes 1..   one byte per pixel row, top row first; bit 7 is the leftmost pixel

Glyph art below covers the 10-row cap band (cell rows 3..12).
"""
import argparse
import pathlib

CELL_W, CELL_H, CAP_TOP = 8, 16, 3

GLYPHS = {
    "A": ["...##...", "..####..", ".##..##.", ".##..##.", ".######.", ".######.", ".##..##.", ".##..##.", ".##..##.", ".##..##."],
    "B": [".#####..", ".##..##.", ".##..##.", ".##..##.", ".#####..", ".#####..", ".##..##.", ".##..##.", ".##..##.", ".#####.."],
    "C": ["..#####.", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", "..#####."],
    "D": [".####...", ".##.##..", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##.##..", ".####..."],
    "E": [".######.", ".######.", ".##.....", ".##.....", ".#####..", ".#####..", ".##.....", ".##.....", ".######.", ".######."],
    "F": [".######.", ".######.", ".##.....", ".##.....", ".#####..", ".#####..", ".##.....", ".##.....", ".##.....", ".##....."],
    "G": ["..#####.", ".######.", ".##.....", ".##.....", ".##.....", ".##.###.", ".##.###.", ".##..##.", ".######.", "..#####."],
    "H": [".##..##.", ".##..##.", ".##..##.", ".##..##.", ".######.", ".######.", ".##..##.", ".##..##.", ".##..##.", ".##..##."],
    "I": [".######.", ".######.", "...##...", "...##...", "...##...", "...##...", "...##...", "...##...", ".######.", ".######."],
    "J": ["....###.", "....###.", ".....##.", ".....##.", ".....##.", ".....##.", ".##..##.", ".##..##.", ".######.", "..####.."],
    "K": [".##..##.", ".##.##..", ".####...", ".###....", ".###....", ".####...", ".##.##..", ".##..##.", ".##..##.", ".##..##."],
    "L": [".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".##.....", ".######.", ".######."],
    "M": ["##....##", "###..###", "########", "##.##.##", "##.##.##", "##....##", "##....##", "##....##", "##....##", "##....##"],
    "N": [".##..##.", ".###.##.", ".###.##.", ".######.", ".######.", ".##.###.", ".##.###.", ".##..##.", ".##..##.", ".##..##."],
    "O": ["..####..", ".######.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".######.", "..####.."],
    "P": [".#####..", ".######.", ".##..##.", ".##..##.", ".######.", ".#####..", ".##.....", ".##.....", ".##.....", ".##....."],
    "Q": ["..####..", ".######.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##.###.", ".##..###", ".#######", "..###.##"],
    "R": [".#####..", ".######.", ".##..##.", ".##..##.", ".######.", ".#####..", ".##.##..", ".##..##.", ".##..##.", ".##..##."],
    "S": ["..#####.", ".######.", ".##.....", ".###....", "..####..", "...####.", "....###.", ".....##.", ".######.", ".#####.."],
    "T": [".######.", ".######.", "...##...", "...##...", "...##...", "...##...", "...##...", "...##...", "...##...", "...##..."],
    "U": [".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".######.", "..####.."],
    "V": [".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", ".##..##.", "..#..#..", "..####..", "...##...", "...##..."],
    "W": ["##....##", "##....##", "##....##", "##....##", "##....##", "##.##.##", "##.##.##", "########", "###..###", "##....##"],
    "X": [".##..##.", ".##..##.", "..####..", "..####..", "...##...", "...##...", "..####..", "..####..", ".##..##.", ".##..##."],
    "Y": [".##..##.", ".##..##.", ".##..##.", "..####..", "..####..", "...##...", "...##...", "...##...", "...##...", "...##..."],
    "Z": [".######.", ".######.", ".....##.", "....##..", "...##...", "...##...", "..##....", ".##.....", ".######.", ".######."],
    "0": ["..####..", ".##..##.", ".##.###.", ".##.###.", ".######.", ".######.", ".###.##.", ".###.##.", ".##..##.", "..####.."],
    "1": ["...##...", "..###...", ".####...", "...##...", "...##...", "...##...", "...##...", "...##...", ".######.", ".######."],
    "2": ["..####..", ".######.", ".##..##.", ".....##.", "....##..", "...##...", "..##....", ".##.....", ".######.", ".######."],
    "3": [".#####..", ".######.", ".....##.", ".....##.", "..####..", "..####..", ".....##.", ".....##.", ".######.", ".#####.."],
    "4": ["....##..", "...###..", "..####..", ".##.##..", ".##.##..", ".######.", ".######.", "....##..", "....##..", "....##.."],
    "5": [".######.", ".######.", ".##.....", ".##.....", ".#####..", ".######.", ".....##.", ".....##.", ".######.", ".#####.."],
    "6": ["..####..", ".######.", ".##.....", ".##.....", ".#####..", ".######.", ".##..##.", ".##..##.", ".######.", "..####.."],
    "7": [".######.", ".######.", ".....##.", "....##..", "....##..", "...##...", "...##...", "..##....", "..##....", "..##...."],
    "8": ["..####..", ".######.", ".##..##.", ".##..##.", "..####..", "..####..", ".##..##.", ".##..##.", ".######.", "..####.."],
    "9": ["..####..", ".######.", ".##..##.", ".##..##.", ".######.", "..#####.", ".....##.", ".....##.", ".######.", "..####.."],
    "#": ["..#..#..", "..#..#..", ".######.", "..#..#..", "..#..#..", "..#..#..", "..#..#..", ".######.", "..#..#..", "..#..#.."],
    ".": ["........", "........", "........", "........", "........", "........", "........", "...##...", "...##...", "...##..."],
    "x": ["........", "........", "........", ".##..##.", "..####..", "...##...", "...##...", "..####..", ".##..##.", ".##..##."],
    ":": ["........", "...##...", "...##...", "...##...", "........", "........", "........", "...##...", "...##...", "...##..."],
    "/": ["......##", ".....##.", ".....##.", "....##..", "....##..", "...##...", "...##...", "..##....", "..##....", ".##....."],
    " ": ["........"] * 10,
}


def rows_of(art):
    rows = [0] * CELL_H
    for i, line in enumerate(art):
        assert len(line) == CELL_W, line
        bits = 0
        for x, c in enumerate(line):
            if c == "#":
                bits |= 0x80 >> x
        rows[CAP_TOP + i] = bits
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "font8x16.glf"))
    args = ap.parse_args()
    glyphs = {ch: rows_of(art) for ch, art in GLYPHS.items()}
    chars = list(GLYPHS)
    dmin = min((sum(bin(a ^ b).count("1") for a, b in zip(glyphs[p], glyphs[q])), p, q)
               for i, p in enumerate(chars) for q in chars[i + 1:])
    print("glyphs:", len(chars), "closest pair:", dmin)
    blob = bytearray(b"NLGF")
    blob += bytes([1, CELL_W, CELL_H, len(chars)])
    for ch in chars:
        blob.append(ord(ch))
        blob += bytes(glyphs[ch])
    pathlib.Path(args.out).write_bytes(bytes(blob))


if __name__ == "__main__":
    main()
