//! Splitting documents into a chapter tree of size-bounded blocks.
//!
//! Markdown headings (`#` .. `######`) define the hierarchy. The root block is
//! the document title; text before the first heading becomes its own child
//! block. A block whose own text exceeds `max_block_size` words is halved
//! recursively at word boundaries (preferring a paragraph break near the
//! middle) and the pieces become its first children.
//!
//! The split is lossless: concatenating every block's heading line and content
//! in pre-order reproduces the input byte for byte.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::word_count;
use crate::{CoreError, Result};

pub const DEFAULT_MAX_BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentBlock {
    pub id: usize,
    pub title: String,
    /// Heading depth; 0 for the root, and parts inherit their parent's depth.
    pub level: usize,
    /// Raw heading line including its newline, empty for roots and parts.
    pub heading: String,
    pub content: String,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTree {
    /// `blocks[0]` is the root; ids equal indices.
    pub blocks: Vec<DocumentBlock>,
}

impl DocumentTree {
    pub fn root(&self) -> &DocumentBlock {
        &self.blocks[0]
    }

    pub fn get(&self, id: usize) -> Option<&DocumentBlock> {
        self.blocks.get(id)
    }

    /// Block ids in document (pre-)order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.blocks[id].children.iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.blocks[id].children.is_empty())
            .collect()
    }

    /// Inverse of [`split_chapters`].
    pub fn reassemble(&self) -> String {
        let mut s = String::new();
        for id in self.preorder() {
            s.push_str(&self.blocks[id].heading);
            s.push_str(&self.blocks[id].content);
        }
        s
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = self.blocks[id].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.blocks[p].parent;
        }
        d
    }

    fn push(&mut self, mut block: DocumentBlock) -> usize {
        let id = self.blocks.len();
        block.id = id;
        if let Some(p) = block.parent {
            self.blocks[p].children.push(id);
        }
        self.blocks.push(block);
        id
    }
}

fn heading_level(line: &str) -> Option<(usize, &str)> {
    let hashes = line.bytes().take_while(|&b| b == b'#').count();
    if !(1..=6).contains(&hashes) {
        return None;
    }
    let rest = &line[hashes..];
    if rest.is_empty() || rest.starts_with(' ') || rest.starts_with('\t') || rest.starts_with('\n') {
        Some((hashes, rest.trim()))
    } else {
        None
    }
}

pub fn split_chapters(title: &str, document: &str, max_block_size: usize) -> Result<DocumentTree> {
    if max_block_size == 0 {
        return Err(CoreError::InvalidParameter("max_block_size must be positive".into()));
    }
    if document.trim().is_empty() {
        return Err(CoreError::EmptyDocument);
    }

    let mut tree = DocumentTree {
        blocks: vec![DocumentBlock {
            id: 0,
            title: title.into(),
            level: 0,
            heading: String::new(),
            content: String::new(),
            children: Vec::new(),
            parent: None,
        }],
    };

    // (block id, level) of the open heading chain
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    let mut current = 0usize;
    let mut in_fence = false;
    let mut preamble: Option<usize> = None;

    for line in document.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
        }
        let heading = if in_fence { None } else { heading_level(line) };
        if let Some((level, text)) = heading {
            while stack.last().is_some_and(|&(_, l)| l >= level) {
                stack.pop();
            }
            let parent = stack.last().map(|&(id, _)| id).unwrap_or(0);
            current = tree.push(DocumentBlock {
                id: 0,
                title: if text.is_empty() { format!("Section {}", tree.blocks.len()) } else { text.into() },
                level,
                heading: line.into(),
                content: String::new(),
                children: Vec::new(),
                parent: Some(parent),
            });
            stack.push((current, level));
            continue;
        }
        if current == 0 && preamble.is_none() {
            let pending = &tree.blocks[0].content;
            if !pending.trim().is_empty() || !line.trim().is_empty() {
                // first real text before any heading: open the preamble block,
                // carrying over leading blank lines
                let carried = core::mem::take(&mut tree.blocks[0].content);
                let id = tree.push(DocumentBlock {
                    id: 0,
                    title: title.into(),
                    level: 1,
                    heading: String::new(),
                    content: carried,
                    children: Vec::new(),
                    parent: Some(0),
                });
                preamble = Some(id);
                current = id;
            }
        }
        tree.blocks[current].content.push_str(line);
    }

    // oversized blocks: move their text into part children placed first
    for id in 0..tree.blocks.len() {
        if word_count(&tree.blocks[id].content) <= max_block_size {
            continue;
        }
        let text = core::mem::take(&mut tree.blocks[id].content);
        let mut parts = Vec::new();
        halve(&text, max_block_size, &mut parts);
        let existing = core::mem::take(&mut tree.blocks[id].children);
        let level = tree.blocks[id].level;
        let base_title = tree.blocks[id].title.clone();
        for (i, part) in parts.into_iter().enumerate() {
            tree.push(DocumentBlock {
                id: 0,
                title: format!("{base_title} (part {})", i + 1),
                level,
                heading: String::new(),
                content: part.into(),
                children: Vec::new(),
                parent: Some(id),
            });
        }
        tree.blocks[id].children.extend(existing);
    }

    Ok(tree)
}

fn halve<'a>(text: &'a str, max: usize, out: &mut Vec<&'a str>) {
    let starts = word_starts(text);
    if starts.len() <= max {
        out.push(text);
        return;
    }
    let mid = starts.len() / 2;
    let window = (starts.len() / 4).max(1);
    let paragraph = (mid.saturating_sub(window)..(mid + window).min(starts.len()))
        .filter(|&w| w > 0 && text[..starts[w]].ends_with("\n\n"))
        .min_by_key(|&w| w.abs_diff(mid));
    let cut = starts[paragraph.unwrap_or(mid)];
    halve(&text[..cut], max, out);
    halve(&text[cut..], max, out);
}

/// Byte offsets at which each whitespace-delimited word begins.
fn word_starts(text: &str) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut prev_ws = true;
    for (i, c) in text.char_indices() {
        let ws = c.is_whitespace();
        if prev_ws && !ws {
            starts.push(i);
        }
        prev_ws = ws;
    }
    starts
}
