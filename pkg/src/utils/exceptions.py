"""カスタム例外クラス定義"""


class ForecastError(Exception):
    """予測エンジン全体の基底エラー"""

    pass


class ValidationError(ForecastError):
    """入力値の検証エラー"""

    pass


class DegenerateScaleError(ValidationError):
    """標準偏差が0のチャネルを標準化しようとした場合のエラー"""

    pass


class InsufficientDataError(ValidationError):
    """ウィンドウを生成するにはデータが短すぎる場合のエラー"""

    pass


class ImputationError(ValidationError):
    """補間に使える観測値が存在しない場合のエラー"""

    pass


class ConfigError(ValidationError):
    """設定ファイルエラー"""

    pass


class MissingArtifactError(ValidationError):
    """前段のコマンドが出力するファイルが存在しない場合のエラー"""

    def __init__(self, path: str, command: str) -> None:
        """MissingArtifactErrorを初期化する

        Args:
            path: 見つからなかったファイルパス
            command: 先に実行すべきサブコマンド名
        """
        super().__init__(
            f"{path} が見つかりません。先に `{command}` を実行してください"
        )
        self.path = path
        self.command = command


class NumericError(ForecastError):
    """NaN/Infの検出や学習の発散などの数値エラー"""

    pass


class InvariantViolation(ForecastError):
    """内部不変条件の違反"""

    pass


class CheckpointError(ForecastError):
    """チェックポイントファイルの形式エラー"""

    pass
