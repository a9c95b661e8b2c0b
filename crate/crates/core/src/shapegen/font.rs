//! 5x7 bitmap glyphs for the option and reference labels.

pub const GLYPH_W: u32 = 5;
pub const GLYPH_H: u32 = 7;

/// Rows top to bottom; bit 4 is the leftmost column.
pub fn glyph(c: char) -> Option<[u8; 7]> {
    let rows = match c {
        'A' => [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'B' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110],
        'C' => [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110],
        'D' => [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100],
        'E' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111],
        'F' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000],
        'R' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001],
        _ => return None,
    };
    Some(rows)
}

/// Yields the lit `(col, row)` cells of a glyph.
pub fn lit_cells(rows: [u8; 7]) -> impl Iterator<Item = (u32, u32)> {
    (0..GLYPH_H).flat_map(move |r| {
        (0..GLYPH_W).filter_map(move |c| {
            ((rows[r as usize] >> (GLYPH_W - 1 - c)) & 1 == 1).then_some((c, r))
        })
    })
}
