//! Per-session state machine. Pure and clock-injected: every call takes the
//! current server time in milliseconds, so the whole protocol can be driven
//! deterministically from tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wordtutor_core::corpus::io::log_to_bytes;
use wordtutor_core::model::{is_storable_char, make_object_sequence, AttributeLexicon, CharEvent, Role, VisualObject};

use crate::protocol::{EndReason, ServerMsg, SessionStatus};
use crate::ChatError;

pub const DEFAULT_FADE_MS: u64 = 1000;
pub const DEFAULT_GAP_MS: u64 = 1100;
pub const DEFAULT_TIME_LIMIT_MS: u64 = 30 * 60 * 1000;
pub const DEFAULT_OBJECT_COUNT: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    #[serde(default = "default_fade")]
    pub fade_ms: u64,
    #[serde(default = "default_gap")]
    pub gap_ms: u64,
    #[serde(default)]
    pub lexicon: AttributeLexicon,
    pub objects: Vec<VisualObject>,
    #[serde(default = "default_limit")]
    pub time_limit_ms: u64,
}

fn default_fade() -> u64 {
    DEFAULT_FADE_MS
}
fn default_gap() -> u64 {
    DEFAULT_GAP_MS
}
fn default_limit() -> u64 {
    DEFAULT_TIME_LIMIT_MS
}

impl SessionConfig {
    /// Default timings and a seeded 9-object sequence.
    pub fn seeded(session_id: impl Into<String>, lexicon: AttributeLexicon, seed: u64) -> Result<Self, ChatError> {
        let objects = make_object_sequence(&lexicon, DEFAULT_OBJECT_COUNT, seed)?;
        Ok(Self {
            session_id: session_id.into(),
            fade_ms: DEFAULT_FADE_MS,
            gap_ms: DEFAULT_GAP_MS,
            lexicon,
            objects,
            time_limit_ms: DEFAULT_TIME_LIMIT_MS,
        })
    }

    pub fn validate(&self) -> Result<(), ChatError> {
        let bad = |m: &str| Err(ChatError::InvalidConfig(format!("session `{}`: {m}", self.session_id)));
        if self.session_id.is_empty() {
            return bad("empty session id");
        }
        if self.fade_ms == 0 {
            return bad("fade_ms must be positive");
        }
        if self.time_limit_ms == 0 {
            return bad("time_limit_ms must be positive");
        }
        if self.objects.is_empty() {
            return bad("no objects");
        }
        if let Err(errs) = self.lexicon.validate() {
            let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
            return bad(&msgs.join("; "));
        }
        Ok(())
    }
}

/// Who a message goes to.
#[derive(Debug, Clone, PartialEq)]
pub enum Delivery {
    To(Role, ServerMsg),
    All(ServerMsg),
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    /// Roles that ever joined, with whether they are currently connected.
    joined: BTreeMap<Role, bool>,
    object_index: usize,
    status: SessionStatus,
    started_ms: u64,
    end_reason: Option<EndReason>,
    events: Vec<CharEvent>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, ChatError> {
        config.validate()?;
        Ok(Self {
            config,
            joined: BTreeMap::new(),
            object_index: 0,
            status: SessionStatus::Waiting,
            started_ms: 0,
            end_reason: None,
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn id(&self) -> &str {
        &self.config.session_id
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn end_reason(&self) -> Option<EndReason> {
        self.end_reason
    }

    pub fn object_index(&self) -> usize {
        self.object_index
    }

    pub fn events(&self) -> &[CharEvent] {
        &self.events
    }

    pub fn is_connected(&self, role: Role) -> bool {
        self.joined.get(&role).copied().unwrap_or(false)
    }

    /// Server time at which the session expires, once started.
    pub fn deadline_ms(&self) -> Option<u64> {
        (self.status == SessionStatus::Active).then(|| self.started_ms + self.config.time_limit_ms)
    }

    fn current_object(&self) -> VisualObject {
        let i = self.object_index.min(self.config.objects.len() - 1);
        self.config.objects[i].clone()
    }

    fn joined_msg(&self, role: Role) -> ServerMsg {
        ServerMsg::Joined {
            role,
            fade_ms: self.config.fade_ms,
            status: self.status,
            index: self.object_index,
            object: self.current_object(),
            dictionary: (role == Role::Tutor).then(|| self.config.lexicon.clone()),
        }
    }

    fn key_msg(e: &CharEvent) -> ServerMsg {
        ServerMsg::Key {
            seq: e.seq,
            sender: e.sender,
            ch: e.ch,
            server_ts: e.server_ts,
        }
    }

    /// A client claims `role`. A role whose client disconnected can be
    /// reclaimed; the ack is followed by every event after `last_seq`.
    pub fn join(&mut self, role: Role, last_seq: Option<u64>, now_ms: u64) -> Result<Vec<Delivery>, ChatError> {
        let mut out = self.check_deadline(now_ms);
        if self.status == SessionStatus::Ended {
            return Err(ChatError::Ended);
        }
        match self.joined.get(&role) {
            Some(true) => return Err(ChatError::RoleTaken(role)),
            Some(false) => {
                self.joined.insert(role, true);
                out.push(Delivery::To(role, self.joined_msg(role)));
                let from = last_seq.unwrap_or(0);
                for e in self.events.iter().filter(|e| e.seq > from) {
                    out.push(Delivery::To(role, Self::key_msg(e)));
                }
                return Ok(out);
            }
            None => {}
        }
        self.joined.insert(role, true);
        if self.joined.len() == Role::ALL.len() {
            self.status = SessionStatus::Active;
            self.started_ms = now_ms;
        }
        out.push(Delivery::To(role, self.joined_msg(role)));
        if self.status == SessionStatus::Active {
            out.push(Delivery::All(ServerMsg::Object {
                index: self.object_index,
                object: self.current_object(),
            }));
        }
        Ok(out)
    }

    /// The client holding `role` went away. The role stays reserved for a
    /// reconnection.
    pub fn disconnect(&mut self, role: Role) {
        if let Some(c) = self.joined.get_mut(&role) {
            *c = false;
        }
    }

    /// Relay one keystroke. Returns the new event and its broadcast, or only
    /// the end notice when the time limit passed before this key arrived.
    pub fn key(
        &mut self,
        sender: Role,
        ch: &str,
        client_ts: u64,
        now_ms: u64,
    ) -> Result<(Option<CharEvent>, Vec<Delivery>), ChatError> {
        let ended = self.check_deadline(now_ms);
        if !ended.is_empty() {
            return Ok((None, ended));
        }
        self.require_active()?;
        let mut chars = ch.chars();
        let c = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(ChatError::NotSingleChar),
        };
        if !is_storable_char(c) {
            return Err(ChatError::ControlChar);
        }
        let event = CharEvent {
            seq: self.events.len() as u64 + 1,
            server_ts: now_ms.saturating_sub(self.started_ms),
            session_id: self.config.session_id.clone(),
            object_index: self.object_index,
            sender,
            ch: c,
            client_ts,
        };
        self.events.push(event.clone());
        Ok((Some(event.clone()), vec![Delivery::All(Self::key_msg(&event))]))
    }

    /// Move to the next object; only the tutor may do this.
    pub fn advance(&mut self, requester: Role, now_ms: u64) -> Result<Vec<Delivery>, ChatError> {
        let ended = self.check_deadline(now_ms);
        if !ended.is_empty() {
            return Ok(ended);
        }
        self.require_active()?;
        if requester != Role::Tutor {
            return Err(ChatError::NotTutor);
        }
        if self.object_index + 1 >= self.config.objects.len() {
            return Ok(self.end(EndReason::Completed));
        }
        self.object_index += 1;
        Ok(vec![Delivery::All(ServerMsg::Object {
            index: self.object_index,
            object: self.current_object(),
        })])
    }

    /// End the session if its time limit has passed.
    pub fn check_deadline(&mut self, now_ms: u64) -> Vec<Delivery> {
        match self.deadline_ms() {
            Some(d) if now_ms >= d => self.end(EndReason::TimeLimit),
            _ => Vec::new(),
        }
    }

    fn end(&mut self, reason: EndReason) -> Vec<Delivery> {
        self.status = SessionStatus::Ended;
        self.end_reason = Some(reason);
        vec![Delivery::All(ServerMsg::End { reason })]
    }

    fn require_active(&self) -> Result<(), ChatError> {
        match self.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Waiting => Err(ChatError::NotActive),
            SessionStatus::Ended => Err(ChatError::Ended),
        }
    }

    /// The session log in the on-disk line format.
    pub fn export_log(&self) -> Vec<u8> {
        log_to_bytes(&self.events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::new(SessionConfig::seeded("s1", AttributeLexicon::default(), 7).unwrap()).unwrap()
    }

    fn active() -> Session {
        let mut s = session();
        s.join(Role::Tutor, None, 0).unwrap();
        s.join(Role::Learner, None, 10).unwrap();
        s
    }

    #[test]
    fn tutor_gets_dictionary_learner_does_not() {
        let mut s = session();
        let d = s.join(Role::Tutor, None, 0).unwrap();
        match &d[..] {
            [Delivery::To(
                Role::Tutor,
                ServerMsg::Joined {
                    dictionary: Some(lex),
                    status,
                    ..
                },
            )] => {
                assert_eq!(lex.color.len() + lex.shape.len(), 6);
                assert_eq!(*status, SessionStatus::Waiting);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            s.join(Role::Tutor, None, 1),
            Err(ChatError::RoleTaken(Role::Tutor))
        ));
        let d = s.join(Role::Learner, None, 2).unwrap();
        assert!(matches!(
            &d[0],
            Delivery::To(Role::Learner, ServerMsg::Joined { dictionary: None, .. })
        ));
        assert!(matches!(&d[1], Delivery::All(ServerMsg::Object { index: 0, .. })));
        assert_eq!(s.status(), SessionStatus::Active);
    }

    #[test]
    fn keys_before_start_rejected() {
        let mut s = session();
        s.join(Role::Tutor, None, 0).unwrap();
        assert!(matches!(s.key(Role::Tutor, "a", 0, 5), Err(ChatError::NotActive)));
    }

    #[test]
    fn first_key_and_server_time() {
        let mut s = active();
        let (e, d) = s.key(Role::Tutor, "a", 120, 130).unwrap();
        let e = e.unwrap();
        assert_eq!((e.seq, e.server_ts, e.ch, e.sender), (1, 120, 'a', Role::Tutor));
        assert_eq!(
            d,
            vec![Delivery::All(ServerMsg::Key {
                seq: 1,
                sender: Role::Tutor,
                ch: 'a',
                server_ts: 120
            })]
        );
    }

    #[test]
    fn deletion_and_paste_rejected_without_state_change() {
        let mut s = active();
        s.key(Role::Learner, "x", 0, 20).unwrap();
        let before = s.export_log();
        assert!(matches!(
            s.key(Role::Learner, "\u{8}", 0, 30),
            Err(ChatError::ControlChar)
        ));
        assert!(matches!(
            s.key(Role::Learner, "\u{7f}", 0, 30),
            Err(ChatError::ControlChar)
        ));
        assert!(matches!(
            s.key(Role::Learner, "hello", 0, 30),
            Err(ChatError::NotSingleChar)
        ));
        assert!(matches!(s.key(Role::Learner, "", 0, 30), Err(ChatError::NotSingleChar)));
        assert_eq!(s.export_log(), before);
        assert_eq!(s.key(Role::Tutor, "y", 0, 40).unwrap().0.unwrap().seq, 2);
    }

    #[test]
    fn advance_rules() {
        let mut s = active();
        assert!(matches!(s.advance(Role::Learner, 20), Err(ChatError::NotTutor)));
        let mut objects = 0;
        let mut end = None;
        for _ in 0..9 {
            for d in s.advance(Role::Tutor, 30).unwrap() {
                match d {
                    Delivery::All(ServerMsg::Object { .. }) => objects += 1,
                    Delivery::All(ServerMsg::End { reason }) => end = Some(reason),
                    other => panic!("unexpected {other:?}"),
                }
            }
        }
        assert_eq!(objects, 8);
        assert_eq!(end, Some(EndReason::Completed));
        assert!(matches!(s.key(Role::Tutor, "a", 0, 40), Err(ChatError::Ended)));
    }

    #[test]
    fn events_carry_object_index() {
        let mut s = active();
        s.key(Role::Tutor, "a", 0, 20).unwrap();
        s.advance(Role::Tutor, 30).unwrap();
        s.key(Role::Learner, "b", 0, 40).unwrap();
        let idx: Vec<usize> = s.events().iter().map(|e| e.object_index).collect();
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn time_limit_drops_late_keys() {
        let mut s = active();
        let limit = s.config().time_limit_ms;
        assert!(s.key(Role::Tutor, "a", 0, 10 + limit - 1).unwrap().0.is_some());
        let (e, d) = s.key(Role::Tutor, "b", 0, 10 + limit).unwrap();
        assert!(e.is_none());
        assert_eq!(
            d,
            vec![Delivery::All(ServerMsg::End {
                reason: EndReason::TimeLimit
            })]
        );
        assert_eq!(s.events().len(), 1);
        assert!(matches!(
            s.key(Role::Tutor, "c", 0, 10 + limit + 1),
            Err(ChatError::Ended)
        ));
    }

    #[test]
    fn reconnection_replays_missed_events() {
        let mut s = active();
        for (i, c) in ["a", "b", "c"].iter().enumerate() {
            s.key(Role::Tutor, c, 0, 20 + i as u64).unwrap();
        }
        s.disconnect(Role::Learner);
        assert!(!s.is_connected(Role::Learner));
        let d = s.join(Role::Learner, Some(1), 50).unwrap();
        let seqs: Vec<u64> = d
            .iter()
            .filter_map(|d| match d {
                Delivery::To(Role::Learner, ServerMsg::Key { seq, .. }) => Some(*seq),
                _ => None,
            })
            .collect();
        assert_eq!(seqs, vec![2, 3]);
        assert!(matches!(s.join(Role::Learner, None, 60), Err(ChatError::RoleTaken(_))));
    }

    #[test]
    fn export_is_stable() {
        let mut s = session();
        assert!(s.export_log().is_empty());
        s.join(Role::Tutor, None, 0).unwrap();
        s.join(Role::Learner, None, 0).unwrap();
        s.key(Role::Tutor, "h", 0, 5).unwrap();
        assert_eq!(s.export_log(), s.export_log());
    }

    #[test]
    fn config_validation() {
        let mut c = SessionConfig::seeded("s", AttributeLexicon::default(), 1).unwrap();
        c.fade_ms = 0;
        assert!(matches!(Session::new(c), Err(ChatError::InvalidConfig(_))));
    }
}
