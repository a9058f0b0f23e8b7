use std::io::{Read, Write};

use super::{FiberLayout, FieldError, FieldState, TorusGrid};

pub const CONTAINER_MAGIC: [u8; 4] = *b"CRMS";
pub const CONTAINER_VERSION: u32 = 1;

/// Write a Bridges state: magic, version, `n1`, `n2`, `n` as little-endian
/// `u32`, `l1`, `l2` as little-endian `f64`, then the values in `(i, j, c)`
/// order.
pub fn write_container<W: Write>(state: &FieldState, mut out: W) -> Result<(), FieldError> {
    let FiberLayout::Bridges { n } = state.layout() else {
        return Err(FieldError::Format(
            "only Bridges states have a container encoding".into(),
        ));
    };
    let grid = state.grid();
    let as_u32 =
        |v: usize| u32::try_from(v).map_err(|_| FieldError::Format(format!("{v} exceeds u32")));
    out.write_all(&CONTAINER_MAGIC)?;
    out.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    for v in [grid.n1(), grid.n2(), n] {
        out.write_all(&as_u32(v)?.to_le_bytes())?;
    }
    out.write_all(&grid.l1().to_le_bytes())?;
    out.write_all(&grid.l2().to_le_bytes())?;
    for v in state.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_container<R: Read>(mut input: R) -> Result<FieldState, FieldError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != CONTAINER_MAGIC {
        return Err(FieldError::Format("bad magic".into()));
    }
    let mut u = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32, FieldError> {
        input.read_exact(&mut u)?;
        Ok(u32::from_le_bytes(u))
    };
    let version = read_u32(&mut input)?;
    if version != CONTAINER_VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let n1 = read_u32(&mut input)? as usize;
    let n2 = read_u32(&mut input)? as usize;
    let n = read_u32(&mut input)? as usize;
    let mut f = [0u8; 8];
    let mut read_f64 = |input: &mut R| -> Result<f64, FieldError> {
        input.read_exact(&mut f)?;
        Ok(f64::from_le_bytes(f))
    };
    let l1 = read_f64(&mut input)?;
    let l2 = read_f64(&mut input)?;
    let grid = TorusGrid::new(n1, n2, l1, l2)?;
    let layout = FiberLayout::Bridges { n };
    let len = n1
        .checked_mul(n2)
        .and_then(|p| p.checked_mul(layout.fiber_dim()))
        .ok_or_else(|| FieldError::Format("size overflow".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(FieldError::Format(format!(
            "expected {} value bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    FieldState::from_values(grid, layout, values)
}

fn component_names(layout: FiberLayout) -> Vec<String> {
    let labels: &[&str] = match layout {
        FiberLayout::Bridges { .. } => &["q1", "q2", "P1", "P2"],
        FiberLayout::DeDonderWeyl { .. } => &["q", "p1", "p2"],
    };
    (1..=layout.n())
        .flat_map(|a| labels.iter().map(move |l| format!("{l}_{a}")))
        .collect()
}

/// One row per grid point: `i, j, t1, t2`, then the fiber values.
pub fn write_csv<W: Write>(state: &FieldState, out: W) -> Result<(), FieldError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["i".to_string(), "j".into(), "t1".into(), "t2".into()];
    header.extend(component_names(state.layout()));
    w.write_record(&header)?;
    let grid = state.grid();
    for i in 0..grid.n1() {
        for j in 0..grid.n2() {
            let mut row = vec![
                i.to_string(),
                j.to_string(),
                grid.t1(i).to_string(),
                grid.t2(j).to_string(),
            ];
            row.extend(state.at(i, j).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
