//! Diagnostics as comma-separated text.

use std::io::{self, Write};

use crate::norms::DiagnosticsRecord;
use crate::scalar::Real;

pub const CSV_HEADER: &str = "t,E_total,E_kin,E_elastic,E_thermal,div_max,dnorm_dev_max,U_sur,D_sur,Theta_sur,F_sur,B_theta_sur,picard_iters,picard_ratio";

pub fn csv_row<T: Real>(r: &DiagnosticsRecord<T>) -> String {
    let reals = [
        r.t,
        r.e_total,
        r.e_kin,
        r.e_elastic,
        r.e_thermal,
        r.div_max,
        r.dnorm_dev_max,
        r.u_sur,
        r.d_sur,
        r.theta_sur,
        r.f_sur,
        r.b_theta_sur,
    ];
    let mut row: Vec<String> = reals.iter().map(|v| format!("{:e}", v.to_f64_lossy())).collect();
    row.push(r.picard_iters.to_string());
    row.push(format!("{:e}", r.picard_ratio.to_f64_lossy()));
    row.join(",")
}

/// Streams records under [`CSV_HEADER`], refusing rows whose time does not
/// increase.
pub struct CsvWriter<W: Write> {
    out: W,
    last_t: Option<f64>,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out, last_t: None })
    }

    pub fn write<T: Real>(&mut self, r: &DiagnosticsRecord<T>) -> io::Result<()> {
        let t = r.t.to_f64_lossy();
        if let Some(prev) = self.last_t {
            if !(t > prev) {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidInput,
                    format!("diagnostics time {t} does not exceed previous row {prev}"),
                ));
            }
        }
        self.last_t = Some(t);
        writeln!(self.out, "{}", csv_row(r))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
