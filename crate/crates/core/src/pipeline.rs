//! Offline evaluation of recorded sessions: attribution, quality control
//! and aggregation in one pass.

use serde::{Deserialize, Serialize};

use crate::scheduler::{IntervalSpec, StimulusPlan};
use crate::scoring::{
    aggregate_scores, attribute_responses, qc_participant, QcConfig, QcVerdict, ResponseEvent,
    ScoreTable, ScoringError, SessionOutcomes, Timing,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub timing: Timing,
    pub qc: QcConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatedSession {
    pub verdict: QcVerdict,
    pub outcomes: SessionOutcomes,
}

pub fn evaluate_session(
    session_id: &str,
    plan: &StimulusPlan,
    events: &[ResponseEvent],
    config: &EvaluationConfig,
) -> EvaluatedSession {
    let attribution = attribute_responses(plan, events, config.timing);
    let verdict = qc_participant(
        session_id,
        &attribution.outcomes,
        events,
        &config.qc,
        config.timing,
    );
    EvaluatedSession {
        verdict,
        outcomes: SessionOutcomes {
            session_id: session_id.to_owned(),
            category: plan.category.clone(),
            outcomes: attribution.outcomes,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub table: ScoreTable,
    pub qualified: Vec<SessionOutcomes>,
    pub verdicts: Vec<QcVerdict>,
}

/// Evaluates every session and aggregates scores over the qualified ones.
pub fn score_sessions<'a, I>(
    sessions: I,
    spec: &IntervalSpec,
    config: &EvaluationConfig,
    min_responses: usize,
) -> Result<ScoredRun, ScoringError>
where
    I: IntoIterator<Item = (&'a str, &'a StimulusPlan, &'a [ResponseEvent])>,
{
    let mut qualified = Vec::new();
    let mut verdicts = Vec::new();
    for (id, plan, events) in sessions {
        let evaluated = evaluate_session(id, plan, events, config);
        if evaluated.verdict.qualified {
            qualified.push(evaluated.outcomes);
        }
        verdicts.push(evaluated.verdict);
    }
    let table = aggregate_scores(&qualified, spec, min_responses)?;
    Ok(ScoredRun {
        table,
        qualified,
        verdicts,
    })
}
