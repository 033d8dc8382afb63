use std::collections::HashSet;

use crate::error::{Error, Result};

pub const DEFAULT_IGNORE_ID: u8 = 255;
pub const CITYSCAPES_TABLE_NAME: &str = "cityscapes";

/// The 19 Cityscapes training classes in train-id order, with their
/// instance-level flag.
const CITYSCAPES: [(&str, bool); 19] = [
    ("road", false),
    ("sidewalk", false),
    ("building", false),
    ("wall", false),
    ("fence", false),
    ("pole", true),
    ("traffic light", true),
    ("traffic sign", true),
    ("vegetation", false),
    ("terrain", false),
    ("sky", false),
    ("person", true),
    ("rider", true),
    ("car", true),
    ("truck", true),
    ("bus", true),
    ("train", true),
    ("motorcycle", true),
    ("bicycle", true),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
    pub instance_level: bool,
}

/// Ordered set of semantic classes plus the reserved ignore value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
    ignore_id: u8,
    lookup: [Option<u16>; 256],
}

impl ClassTable {
    pub fn new(entries: Vec<ClassEntry>, ignore_id: u8) -> Result<Self> {
        let mut lookup = [None; 256];
        let mut names = HashSet::new();
        for (idx, e) in entries.iter().enumerate() {
            if e.id == ignore_id {
                return Err(Error::InvalidClassTable(format!(
                    "class {:?} uses the ignore id {ignore_id}",
                    e.name
                )));
            }
            if lookup[e.id as usize].is_some() {
                return Err(Error::InvalidClassTable(format!(
                    "duplicate class id {}",
                    e.id
                )));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::InvalidClassTable(format!(
                    "duplicate class name {:?}",
                    e.name
                )));
            }
            lookup[e.id as usize] = Some(idx as u16);
        }
        Ok(Self {
            entries,
            ignore_id,
            lookup,
        })
    }

    /// Cityscapes train ids 0..=18, ignore 255.
    pub fn cityscapes() -> Self {
        let entries = CITYSCAPES
            .iter()
            .enumerate()
            .map(|(i, (name, inst))| ClassEntry {
                id: i as u8,
                name: (*name).to_string(),
                instance_level: *inst,
            })
            .collect();
        Self::new(entries, DEFAULT_IGNORE_ID).expect("built-in table is valid")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            CITYSCAPES_TABLE_NAME => Ok(Self::cityscapes()),
            other => Err(Error::InvalidClassTable(format!(
                "unknown class table {other:?}"
            ))),
        }
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ignore_id(&self) -> u8 {
        self.ignore_id
    }

    /// Position of `id` in table order.
    pub fn index_of(&self, id: u8) -> Option<usize> {
        self.lookup[id as usize].map(usize::from)
    }

    pub fn contains(&self, id: u8) -> bool {
        self.lookup[id as usize].is_some()
    }

    /// True when `value` may appear in a label map under this table.
    pub fn is_valid_value(&self, value: u8) -> bool {
        value == self.ignore_id || self.contains(value)
    }

    pub fn get(&self, id: u8) -> Option<&ClassEntry> {
        self.index_of(id).map(|i| &self.entries[i])
    }

    pub fn id_of(&self, name: &str) -> Result<u8> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.id)
            .ok_or_else(|| Error::UnknownClassName(name.to_string()))
    }

    pub fn name_of(&self, id: u8) -> Option<&str> {
        self.get(id).map(|e| e.name.as_str())
    }

    pub fn is_instance_level(&self, id: u8) -> bool {
        self.get(id).is_some_and(|e| e.instance_level)
    }
}

impl Default for ClassTable {
    fn default() -> Self {
        Self::cityscapes()
    }
}
