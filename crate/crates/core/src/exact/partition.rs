/// Restricted-growth strings of length `n` using at most `max_blocks`
/// distinct labels: `a[0] = 0` and `a[i] <= 1 + max(a[..i])`. Each string
/// names one set partition of `0..n` exactly once.
#[derive(Debug, Clone)]
pub struct CanonicalPartitions {
    current: Vec<usize>,
    max_blocks: usize,
    done: bool,
}

pub fn canonical_partitions(n: usize, max_blocks: usize) -> CanonicalPartitions {
    CanonicalPartitions { current: vec![0; n], max_blocks, done: max_blocks == 0 && n > 0 }
}

impl Iterator for CanonicalPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // prefix maxima
        let n = self.current.len();
        let mut prefix_max = vec![0; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.current[i - 1]);
        }
        let mut advanced = false;
        for i in (1..n).rev() {
            let cap = (prefix_max[i] + 1).min(self.max_blocks - 1);
            if self.current[i] < cap {
                self.current[i] += 1;
                for x in &mut self.current[i + 1..] {
                    *x = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.done = true;
        }
        Some(out)
    }
}
