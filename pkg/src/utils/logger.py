"""ログ管理モジュール"""

import logging
import os
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Logger:
    """システムのログを管理するクラス"""

    def __init__(
        self,
        name: str = "ugwf",
        log_file: Optional[str] = None,
        level: str = "INFO",
    ) -> None:
        """Loggerを初期化する

        最初に生成されたLoggerの設定（レベル・ファイル）がプロセス全体に適用される。

        Args:
            name: ロガー名
            log_file: ログファイルパス（Noneの場合は標準エラー出力のみ）
            level: ログレベル名
        """
        self.log_file = log_file
        self._setup_logger(name, level)

    def _setup_logger(self, name: str, level: str) -> None:
        """ロガーの設定"""
        handlers: list[logging.Handler] = [logging.StreamHandler()]
        if self.log_file:
            # ログディレクトリの作成
            log_dir = os.path.dirname(self.log_file)
            if log_dir and not os.path.exists(log_dir):
                os.makedirs(log_dir)
            handlers.insert(0, logging.FileHandler(self.log_file))

        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.INFO),
            format=LOG_FORMAT,
            handlers=handlers,
        )
        self.logger = logging.getLogger(name)

    def log_epoch(
        self, cell: str, epoch: int, train_mse: float, val_mse: float
    ) -> None:
        """エポックごとの損失をログに記録する

        Args:
            cell: 実験セル名（モデル・欠損率・シード）
            epoch: エポック番号（0は学習前）
            train_mse: 学習データのMSE
            val_mse: 検証データのMSE
        """
        self.logger.info(
            f"[{cell}] epoch {epoch}: train_mse={train_mse:.6f} val_mse={val_mse:.6f}"
        )

    def log_checkpoint_saved(self, path: str) -> None:
        """チェックポイント保存完了をログに記録する

        Args:
            path: 保存されたファイルパス
        """
        self.logger.info(f"Checkpoint saved: {path}")

    def log_artifact_written(self, path: str) -> None:
        """成果物ファイルの書き出しをログに記録する

        Args:
            path: 書き出されたファイルパス
        """
        self.logger.info(f"Artifact written: {path}")

    def log_cell_failed(self, cell: str, error: Exception) -> None:
        """実験セルの失敗をログに記録する

        Args:
            cell: 実験セル名
            error: 発生した例外
        """
        self.logger.error(f"Error: cell {cell} failed: {error}")

    def log_error(self, error_message: str) -> None:
        """エラーをログに記録する

        Args:
            error_message: エラーメッセージ
        """
        self.logger.error(f"Error: {error_message}")

    def log_warning(self, message: str) -> None:
        """警告メッセージをログに記録する

        Args:
            message: 警告メッセージ
        """
        self.logger.warning(message)

    def log_info(self, message: str) -> None:
        """情報メッセージをログに記録する

        Args:
            message: 情報メッセージ
        """
        self.logger.info(message)

    def log_debug(self, message: str) -> None:
        """デバッグメッセージをログに記録する

        Args:
            message: デバッグメッセージ
        """
        self.logger.debug(message)
