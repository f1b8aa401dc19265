//! On-disk library of solved and unsolved problems.
//!
//! Layout: `<root>/index.json` lists every record and
//! `<root>/problems/<id>.json` holds the record itself. Every write goes to a
//! temporary file in the target directory and is renamed into place. One
//! writer at a time.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{match_tips, transfer_solution};
use crate::characteristic::MetricWeights;
use crate::metrics::tree_distance;
use crate::problems::{ProblemError, ProblemFile, TreeProblem};
use crate::scalar::Scalar;
use crate::solutions::{decode_path, Solution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("problem id `{0}` already exists")]
    DuplicateId(String),
    #[error("problem id `{0}` is not usable as a file name")]
    InvalidId(String),
    #[error("no problem `{0}` in the library")]
    UnknownId(String),
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("solution does not fit problem `{id}`: {reason}")]
    InconsistentSolution { id: String, reason: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

fn storage<E: std::fmt::Display>(context: &Path) -> impl FnOnce(E) -> LibraryError + '_ {
    move |e| LibraryError::StorageFailure(format!("{}: {e}", context.display()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub problem_id: String,
    pub file: String,
    pub has_solution: bool,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub created_unix: u64,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct StoredRecord<S> {
    problem: ProblemFile<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solution: Option<Solution>,
    metadata: RecordMetadata,
}

#[derive(Debug, Clone)]
pub struct LibraryRecord<S> {
    pub problem: TreeProblem<S>,
    pub solution: Option<Solution>,
    pub metadata: RecordMetadata,
}

/// A solution carried over from the closest solved analogue.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome<S> {
    pub source_id: String,
    pub distance: S,
    pub solution: Solution,
}

#[derive(Debug, Clone)]
pub struct ProblemLibrary {
    root: PathBuf,
    index: Vec<IndexEntry>,
}

const INDEX_FILE: &str = "index.json";
const PROBLEM_DIR: &str = "problems";

impl ProblemLibrary {
    /// Opens the library at `root`; a missing directory is an empty library.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, LibraryError> {
        let root = root.into();
        let index_path = root.join(INDEX_FILE);
        let index = if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(storage(&index_path))?;
            serde_json::from_str(&text).map_err(storage(&index_path))?
        } else {
            Vec::new()
        };
        Ok(Self { root, index })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn list(&self) -> &[IndexEntry] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.iter().any(|e| e.problem_id == id)
    }

    /// Stores `problem` (and `solution`, if any); returns the id used.
    ///
    /// A problem with an empty id is stored under the first free `pN`.
    pub fn add<S: Scalar>(
        &mut self,
        problem: &TreeProblem<S>,
        solution: Option<&Solution>,
        tags: Vec<String>,
    ) -> Result<String, LibraryError> {
        let id = if problem.id().is_empty() { self.fresh_id() } else { problem.id().to_string() };
        check_id(&id)?;
        if self.contains(&id) {
            return Err(LibraryError::DuplicateId(id));
        }
        if let Some(s) = solution {
            decode_path(problem.tree(), s)
                .map_err(|e| LibraryError::InconsistentSolution { id: id.clone(), reason: e.to_string() })?;
        }
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut file = problem.to_file();
        file.id = Some(id.clone());
        let record = StoredRecord {
            problem: file,
            solution: solution.map(|s| s.clone().with_problem_id(id.clone())),
            metadata: RecordMetadata { created_unix, tags: tags.clone() },
        };
        let rel = format!("{PROBLEM_DIR}/{id}.json");
        let dir = self.root.join(PROBLEM_DIR);
        fs::create_dir_all(&dir).map_err(storage(&dir))?;
        write_atomic(&self.root.join(&rel), &serde_json::to_string_pretty(&record).map_err(storage(&dir))?)?;

        let mut index = self.index.clone();
        index.push(IndexEntry { problem_id: id.clone(), file: rel, has_solution: solution.is_some(), tags });
        let index_path = self.root.join(INDEX_FILE);
        write_atomic(&index_path, &serde_json::to_string_pretty(&index).map_err(storage(&index_path))?)?;
        self.index = index;
        log::info!("stored problem `{id}` in {}", self.root.display());
        Ok(id)
    }

    fn fresh_id(&self) -> String {
        (1..).map(|n| format!("p{n}")).find(|c| !self.contains(c)).expect("unbounded")
    }

    pub fn load<S: Scalar>(&self, id: &str) -> Result<LibraryRecord<S>, LibraryError> {
        let entry =
            self.index.iter().find(|e| e.problem_id == id).ok_or_else(|| LibraryError::UnknownId(id.to_string()))?;
        let path = self.root.join(&entry.file);
        let text = fs::read_to_string(&path).map_err(storage(&path))?;
        let stored: StoredRecord<S> = serde_json::from_str(&text).map_err(storage(&path))?;
        let problem = stored.problem.into_problem(id, false)?;
        Ok(LibraryRecord { problem, solution: stored.solution, metadata: stored.metadata })
    }

    /// Records with the query's tip count and feature arity, ranked by
    /// distance to the query (ties broken by id), at most `limit` of them.
    ///
    /// Candidates are relabelled onto the query's tips through
    /// [`match_tips`]; a candidate with a different shape is compared
    /// directly when its tip labels coincide with the query's and skipped
    /// otherwise.
    pub fn nearest_problems<S: Scalar>(
        &self,
        query: &TreeProblem<S>,
        w: &MetricWeights<S>,
        limit: usize,
    ) -> Result<Vec<(String, S)>, LibraryError> {
        Ok(self.ranked(query, w)?.into_iter().take(limit).map(|(id, d, _)| (id, d)).collect())
    }

    fn ranked<S: Scalar>(
        &self,
        query: &TreeProblem<S>,
        w: &MetricWeights<S>,
    ) -> Result<Vec<(String, S, LibraryRecord<S>)>, LibraryError> {
        let mut out = Vec::new();
        for entry in &self.index {
            let record = self.load::<S>(&entry.problem_id)?;
            let cand = &record.problem;
            if cand.tip_count() != query.tip_count() || cand.feature_arity() != query.feature_arity() {
                continue;
            }
            let aligned = match match_tips(cand, query) {
                Some(map) => match cand.tree().relabel_tips(&map) {
                    Ok(t) => t,
                    Err(_) => continue,
                },
                None if cand.tree().tip_labels() == query.tree().tip_labels() => cand.tree().clone(),
                None => continue,
            };
            match tree_distance(&aligned, query.tree(), w) {
                Ok(d) => out.push((entry.problem_id.clone(), d, record)),
                Err(e) => log::debug!("skipping `{}`: {e}", entry.problem_id),
            }
        }
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Transfers the solution of the nearest solved analogue onto `query`.
    pub fn transfer_from_nearest<S: Scalar>(
        &self,
        query: &TreeProblem<S>,
        w: &MetricWeights<S>,
    ) -> Result<Option<TransferOutcome<S>>, LibraryError> {
        for (id, distance, record) in self.ranked(query, w)? {
            let Some(sol) = &record.solution else { continue };
            match transfer_solution(&record.problem, sol, query) {
                Ok(solution) => return Ok(Some(TransferOutcome { source_id: id, distance, solution })),
                Err(e) => log::debug!("cannot transfer from `{id}`: {e}"),
            }
        }
        Ok(None)
    }
}

fn check_id(id: &str) -> Result<(), LibraryError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(LibraryError::InvalidId(id.to_string()))
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), LibraryError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(storage(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(storage(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(storage(path))?;
    tmp.write_all(b"\n").map_err(storage(path))?;
    tmp.persist(path).map_err(|e| storage(path)(e.error))?;
    Ok(())
}
