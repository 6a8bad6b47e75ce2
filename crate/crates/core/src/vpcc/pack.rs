//! Patch packing and the occupancy map.

use super::patch::Patch;

/// Places patches on a grid `width` pixels wide, largest footprint first,
/// at the first free block position in raster order. Each block of
/// `block × block` pixels belongs to at most one patch. Returns the grid
/// size `(width, height)`; the height grows as needed.
pub fn pack_patches(patches: &mut [Patch], width: u32, block: u32) -> (u32, u32) {
    let widest = patches.iter().map(|p| p.width).max().unwrap_or(0);
    let width = width.max(widest).div_ceil(block) * block;
    let cols = (width / block) as usize;
    let mut rows = 1usize;
    let mut used: Vec<bool> = vec![false; cols * rows];
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(patches[i].area()), i));
    for i in order {
        let bw = patches[i].width.div_ceil(block) as usize;
        let bh = patches[i].height.div_ceil(block) as usize;
        let mut r = 0;
        loop {
            if r + bh > rows {
                let add = r + bh - rows;
                used.extend(std::iter::repeat(false).take(add * cols));
                rows += add;
            }
            let found = (0..=cols - bw).find(|&c| (r..r + bh).all(|y| (c..c + bw).all(|x| !used[y * cols + x])));
            if let Some(c) = found {
                for y in r..r + bh {
                    for x in c..c + bw {
                        used[y * cols + x] = true;
                    }
                }
                patches[i].u0 = c as u32 * block;
                patches[i].v0 = r as u32 * block;
                break;
            }
            r += 1;
        }
    }
    (width, rows as u32 * block)
}

/// Per-pixel occupancy with derived sub-block and block flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMap {
    pub width: u32,
    pub height: u32,
    pub block: u32,
    pub sub_block: u32,
    pub pixels: Vec<bool>,
    /// Row-major over `width/sub_block × height/sub_block`.
    pub sub_flags: Vec<bool>,
    /// Row-major over `width/block × height/block`.
    pub block_flags: Vec<bool>,
}

impl OccupancyMap {
    pub fn from_pixels(width: u32, height: u32, block: u32, sub_block: u32, pixels: Vec<bool>) -> Self {
        let sw = width.div_ceil(sub_block);
        let sh = height.div_ceil(sub_block);
        let mut sub_flags = vec![false; (sw * sh) as usize];
        for y in 0..height {
            for x in 0..width {
                if pixels[(y * width + x) as usize] {
                    sub_flags[((y / sub_block) * sw + x / sub_block) as usize] = true;
                }
            }
        }
        let bw = width.div_ceil(block);
        let bh = height.div_ceil(block);
        let per = block / sub_block;
        let mut block_flags = vec![false; (bw * bh) as usize];
        for by in 0..bh {
            for bx in 0..bw {
                let mut all = true;
                for sy in by * per..((by + 1) * per).min(sh) {
                    for sx in bx * per..((bx + 1) * per).min(sw) {
                        all &= sub_flags[(sy * sw + sx) as usize];
                    }
                }
                block_flags[(by * bw + bx) as usize] = all;
            }
        }
        Self {
            width,
            height,
            block,
            sub_block,
            pixels,
            sub_flags,
            block_flags,
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn occupied_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }
}

/// Marks every pixel that carries a projected point.
pub fn build_occupancy_map(patches: &[Patch], width: u32, height: u32, block: u32, sub_block: u32) -> OccupancyMap {
    let mut pixels = vec![false; (width * height) as usize];
    for p in patches {
        for y in 0..p.height {
            for x in 0..p.width {
                if p.occupied[(y * p.width + x) as usize] {
                    pixels[((p.v0 + y) * width + p.u0 + x) as usize] = true;
                }
            }
        }
    }
    OccupancyMap::from_pixels(width, height, block, sub_block, pixels)
}
