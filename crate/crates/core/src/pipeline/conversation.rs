use std::collections::VecDeque;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub source_id: String,
    pub version: u32,
}

/// Server-held dialogue state; only the last `capacity` messages survive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub source_ref: SourceRef,
    history: VecDeque<Message>,
    capacity: usize,
    pub created_at: DateTime<Utc>,
}

impl Conversation {
    pub const DEFAULT_CAPACITY: usize = 10;

    pub fn new(source_ref: SourceRef, capacity: usize) -> Self {
        Self {
            id: uuid::Uuid::new_v4().to_string(),
            source_ref,
            history: VecDeque::with_capacity(capacity),
            capacity,
            created_at: Utc::now(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, role: Role, text: impl Into<String>) {
        if self.capacity == 0 {
            return;
        }
        while self.history.len() >= self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(Message { role, text: text.into() });
    }

    pub fn history(&self) -> impl Iterator<Item = &Message> {
        self.history.iter()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// One `User: ...` or `System: ...` line per message, oldest first.
    /// Line breaks inside a message are folded to spaces.
    pub fn history_text(&self) -> String {
        self.history
            .iter()
            .map(|m| {
                let who = match m.role {
                    Role::User => "User",
                    Role::System => "System",
                };
                format!("{who}: {}", m.text.split_whitespace().collect::<Vec<_>>().join(" "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(k: usize) -> Conversation {
        Conversation::new(SourceRef { source_id: "s".into(), version: 1 }, k)
    }

    #[test]
    fn ring_buffer_keeps_latest() {
        let mut c = conv(3);
        for i in 0..5 {
            c.push(Role::User, format!("m{i}"));
        }
        let texts: Vec<_> = c.history().map(|m| m.text.as_str()).collect();
        assert_eq!(texts, ["m2", "m3", "m4"]);
        let mut z = conv(0);
        z.push(Role::User, "x");
        assert!(z.is_empty());
    }

    #[test]
    fn history_text_folds_lines() {
        let mut c = conv(4);
        c.push(Role::User, "total per product?");
        c.push(Role::System, "SELECT a\nFROM t");
        assert_eq!(c.history_text(), "User: total per product?\nSystem: SELECT a FROM t");
    }
}
