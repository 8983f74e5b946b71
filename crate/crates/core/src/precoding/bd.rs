//! Block-diagonalization baseline: each user's precoder lives in the null
//! space of all other users' channels, carrying the top singular directions
//! of the projected own channel with equal per-stream power.

use crate::channel::ChannelSet;
use crate::error::{Result, SlpError};
use crate::linalg::{null_space_basis, svd, ComplexMatrix};

/// Per-user block-diagonalization precoders.
#[derive(Debug, Clone)]
pub struct BdPrecoder {
    per_user: Vec<ComplexMatrix>,
}

impl BdPrecoder {
    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    /// Precoder of user k, N_T x L.
    pub fn user(&self, k: usize) -> &ComplexMatrix {
        &self.per_user[k]
    }

    /// Column-stacked composite precoder, N_T x K·L.
    pub fn stacked(&self) -> ComplexMatrix {
        let nt = self.per_user[0].rows();
        let l = self.per_user[0].cols();
        let k = self.per_user.len();
        let mut p = ComplexMatrix::zeros(nt, k * l);
        for (u, pk) in self.per_user.iter().enumerate() {
            for r in 0..nt {
                for c in 0..l {
                    p[(r, u * l + c)] = pk[(r, c)];
                }
            }
        }
        p
    }
}

/// Build the BD precoders for `streams` data streams per user under total
/// power `power` (equal power per stream).
pub fn bd_precoder(h: &ChannelSet, streams: usize, power: f64) -> Result<BdPrecoder> {
    let users = h.users();
    let nt = h.tx_antennas();
    let nr = h.rx_antennas();
    if streams > nr {
        return Err(SlpError::Config(format!(
            "streams per user {streams} exceeds receive antennas {nr}"
        )));
    }
    if nt < users * streams {
        return Err(SlpError::Config(format!(
            "transmit antennas {nt} below total streams {}",
            users * streams
        )));
    }
    if users > 1 && nt < users * nr {
        log::warn!(
            "BD with N_T = {nt} < K*N_R = {}: null spaces exist only while \
             N_T - (K-1)*N_R >= L",
            users * nr
        );
    }

    let per_stream_gain = (power / (users * streams) as f64).sqrt();
    let mut per_user = Vec::with_capacity(users);
    for k in 0..users {
        let null_basis = if users == 1 {
            ComplexMatrix::identity(nt)
        } else {
            let mut others: Option<ComplexMatrix> = None;
            for i in 0..users {
                if i == k {
                    continue;
                }
                others = Some(match others {
                    None => h.user(i).clone(),
                    Some(m) => ComplexMatrix::vstack(&m, h.user(i)),
                });
            }
            null_space_basis(&others.unwrap(), 0.0)?
        };
        if null_basis.cols() < streams {
            return Err(SlpError::Config(format!(
                "null space of the other users' channels has dimension {} < {streams}",
                null_basis.cols()
            )));
        }
        let effective = h.user(k).matmul(&null_basis);
        let (_, _, v) = svd(&effective)?;
        let v_top = v.block(0, v.rows(), 0, streams);
        let pk = null_basis.matmul(&v_top).scale_re(per_stream_gain);
        per_user.push(pk);
    }
    Ok(BdPrecoder { per_user })
}
