//! Dense binary masks shared by the synthesis, growth, and evaluation stages.

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as false.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> bool {
        self.contains(x, y) && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.data[y * self.width + x] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    /// Number of 8-connected components among set pixels.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.data.len()];
        let mut count = 0;
        for start in 0..self.data.len() {
            if !self.data[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x + dx, y + dy);
                        if self.contains(nx, ny) {
                            let j = ny as usize * self.width + nx as usize;
                            if self.data[j] && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_counts_diagonal_as_connected() {
        let m = Mask::from_fn(4, 4, |x, y| x == y);
        assert_eq!(m.connected_components(), 1);
        let m2 = Mask::from_fn(4, 4, |x, y| (x, y) == (0, 0) || (x, y) == (3, 1));
        assert_eq!(m2.connected_components(), 2);
    }

    #[test]
    fn out_of_bounds_reads_false() {
        let m = Mask::from_fn(2, 2, |_, _| true);
        assert!(!m.get_checked(-1, 0));
        assert!(!m.get_checked(0, 2));
        assert!(m.get_checked(1, 1));
    }
}
