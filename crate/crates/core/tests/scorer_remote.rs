mod mock_http;

use std::sync::Arc;
use std::time::{Duration, Instant};

use asq_core::qgen::{argmax, best_question, QuestionCandidate};
use asq_core::scorer::{
    FallbackScorer, NgramModel, QuestionScore, QuestionScorer, RemoteScorer, ScorerError, BASELINE_ID, REMOTE_ID,
};
use mock_http::Reply;
use proptest::prelude::*;

#[test]
fn remote_value_is_used_verbatim() {
    let (url, stats) = mock_http::serve(|body| {
        let request: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(request["text"], "What was broken ?");
        Reply::json(r#"{"logprob": -3.2}"#)
    });
    let score = RemoteScorer::new(url).score("What was broken ?").unwrap();
    assert_eq!(score.value, -3.2);
    assert_eq!(score.scorer_id, REMOTE_ID);
    assert_eq!(stats.requests.load(std::sync::atomic::Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let err = RemoteScorer::new(mock_http::closed_url()).score("What ?").unwrap_err();
    assert!(matches!(err, ScorerError::Unavailable(_)), "{err:?}");
}

#[test]
fn bad_replies_are_unavailable() {
    for body in ["{oops", r#"{"score": 1.0}"#, r#"{"logprob": "high"}"#] {
        let (url, _) = mock_http::serve(move |_| Reply::json(body));
        let err = RemoteScorer::new(url).score("What ?").unwrap_err();
        assert!(matches!(err, ScorerError::Unavailable(_)), "{body}: {err:?}");
    }
    let (url, _) = mock_http::serve(|_| Reply {
        status: 500,
        body: r#"{"logprob": -1.0}"#.into(),
        delay: Duration::ZERO,
    });
    assert!(matches!(
        RemoteScorer::new(url).score("What ?"),
        Err(ScorerError::Unavailable(_))
    ));
}

#[test]
fn slow_replies_time_out() {
    let (url, _) = mock_http::serve(|_| Reply {
        delay: Duration::from_secs(3),
        ..Reply::json(r#"{"logprob": -1.0}"#)
    });
    let scorer = RemoteScorer::with_limits(url, Duration::from_millis(200), 1);
    let start = Instant::now();
    assert!(matches!(scorer.score("What ?"), Err(ScorerError::Unavailable(_))));
    assert!(start.elapsed() < Duration::from_secs(2));
}

#[test]
fn in_flight_requests_are_bounded() {
    let (url, stats) = mock_http::serve(|_| Reply {
        delay: Duration::from_millis(80),
        ..Reply::json(r#"{"logprob": -2.0}"#)
    });
    let scorer = Arc::new(RemoteScorer::with_limits(url, Duration::from_secs(5), 2));
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let scorer = scorer.clone();
            std::thread::spawn(move || scorer.score(&format!("What is {i} ?")).unwrap().value)
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), -2.0);
    }
    assert!(stats.max_in_flight.load(std::sync::atomic::Ordering::SeqCst) <= 2);
}

#[test]
fn failed_remote_rescores_whole_batch_with_baseline() {
    let baseline = Arc::new(NgramModel::bundled());
    let scorer = FallbackScorer::new(Box::new(RemoteScorer::new(mock_http::closed_url())), baseline.clone());
    let questions = vec!["What was broken ?".to_string(), "What broken ?".to_string()];
    let scores = scorer.score_batch(&questions).unwrap();
    for (q, s) in questions.iter().zip(&scores) {
        assert_eq!(s.scorer_id, BASELINE_ID);
        assert_eq!(s.value, baseline.logprob(q).unwrap());
    }
    scorer.score_batch(&questions).unwrap();
    assert_eq!(scorer.fallback_count(), 2);
}

struct Affine {
    base: NgramModel,
    scale: f64,
    shift: f64,
}

impl QuestionScorer for Affine {
    fn id(&self) -> &str {
        "affine"
    }

    fn score(&self, question: &str) -> Result<QuestionScore, ScorerError> {
        let v = self.base.logprob(question)?;
        Ok(QuestionScore {
            value: self.scale * v + self.shift,
            scorer_id: "affine".into(),
        })
    }
}

fn candidate(text: &str) -> QuestionCandidate {
    QuestionCandidate {
        template_id: "t".into(),
        filled_text: text.into(),
        fill_words: Vec::new(),
        node_position: 1,
        relation: "ARG1".into(),
        aligned_fill: true,
    }
}

const QUESTIONS: &[&str] = &[
    "What was broken ?",
    "What broken ?",
    "Who made the box ?",
    "Where did the fox go ?",
    "What is drawn ?",
    "When did he arrive ?",
];

proptest! {
    #[test]
    fn argmax_is_invariant_under_increasing_affine_maps(
        values in prop::collection::vec(-1000i32..1000, 1..20),
        scale in 1i32..50,
        shift in -1000i32..1000,
    ) {
        let raw: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let mapped: Vec<f64> = raw.iter().map(|v| f64::from(scale) * v + f64::from(shift)).collect();
        prop_assert_eq!(argmax(&raw), argmax(&mapped));
    }

    #[test]
    fn best_question_ignores_score_scale(
        picks in prop::collection::vec(0..QUESTIONS.len(), 1..6),
        scale in 0.1f64..100.0,
        shift in -100.0f64..100.0,
    ) {
        let base = NgramModel::bundled();
        let candidates: Vec<_> = picks.iter().map(|&i| candidate(QUESTIONS[i])).collect();
        let plain = best_question(candidates.clone(), &base).unwrap().unwrap().0;
        let affine = Affine { base, scale, shift };
        let mapped = best_question(candidates, &affine).unwrap().unwrap().0;
        prop_assert_eq!(plain.filled_text, mapped.filled_text);
    }
}
