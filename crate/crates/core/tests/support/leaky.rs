//! Negative control for the privacy audits.
//!
//! Builds the honest queries, then rewrites every later-block occurrence of
//! the desired message at a server to the index that server already saw in
//! block 1. The server then sees fewer distinct indices of the desired file
//! than of the others.

use mupir_core::pir::{
    CapacityAchieving, KSum, PermutationSet, PirParams, PirQuery, QueryGenerator, SymbolRef,
};
use mupir_core::Result;

pub struct Leaky;

impl QueryGenerator for Leaky {
    fn build(
        &self,
        desired: usize,
        params: &PirParams,
        perms: &PermutationSet,
    ) -> Result<Vec<PirQuery>> {
        CapacityAchieving
            .build(desired, params, perms)?
            .into_iter()
            .map(|q| {
                let anchor = q.blocks()[0]
                    .iter()
                    .flat_map(|s| s.terms())
                    .find(|t| t.message == desired)
                    .map(|t| t.index);
                let Some(anchor) = anchor else {
                    return Ok(q);
                };
                let blocks = q
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(b, block)| {
                        block
                            .iter()
                            .map(|sum| {
                                let terms = sum
                                    .terms()
                                    .iter()
                                    .map(|t| SymbolRef {
                                        message: t.message,
                                        index: if b > 0 && t.message == desired {
                                            anchor
                                        } else {
                                            t.index
                                        },
                                    })
                                    .collect();
                                KSum::new(terms)
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                PirQuery::from_blocks(q.server(), blocks)
            })
            .collect()
    }
}
